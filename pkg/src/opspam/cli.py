"""Command-line pipeline: ingest -> cluster -> sieve -> featurize -> train, plus eval and report.

Every stage reads a JSON run config, writes its outputs under the output
directory and records a manifest (config hash, seed, input and output hashes)
in ``manifests/<stage>.json``.  Exit codes: 0 success, 2 configuration error or
missing upstream artifact, 1 any other failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import __version__
from .classifier import MaxentModel, train
from .corpus import (
    FOUR_DOMAINS,
    Domain,
    load_labeled,
    load_products,
    load_reviews,
    load_tasks,
    corpus_stats,
    labeled_record,
    sample_truthful,
    sieve_labels,
    write_jsonl,
)
from .evaluation import (
    Pipeline,
    cross_domain,
    indomain_all,
    learning_curve,
    reviewer_transfer,
)
from .features import FAMILIES, FeatureConfig, FeatureSpace, load_lexicon, load_phrases
from .reviewer_graph import build_graph, em_cluster, format_assignment
from .treebank import parse_cached
from .treequery import iter_profile_rows

log = logging.getLogger("opspam")

PROTOCOLS = ("indomain", "cross", "curve", "reviewer")


class StageError(Exception):
    """Failure with a dedicated exit code."""

    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


# -- config --------------------------------------------------------------------

@dataclass
class RunConfig:
    raw: dict
    base: Path  # directory the relative input paths are resolved against
    seed: int
    out: Path

    def path(self, key: str) -> Optional[Path]:
        value = self.raw.get("paths", {}).get(key)
        return None if value is None else (self.base / value)

    def section(self, name: str) -> dict:
        return self.raw.get(name, {})

    @property
    def hash(self) -> str:
        return hashlib.sha256(_canonical_json(self.effective()).encode()).hexdigest()

    def effective(self) -> dict:
        # seed is part of the config identity; the output dir is not
        return {**{k: v for k, v in self.raw.items() if k != "out"}, "seed": self.seed}

    def pipeline(self) -> Pipeline:
        feats = self.section("features")
        families = tuple(feats.get("families", ()))
        lexicon = load_lexicon(self.path("lexicon")) if "lexicon" in families else None
        phrases = load_phrases(self.path("phrases")) if "ad_phrases" in families else ()
        clf = self.section("classifier")
        return Pipeline(
            FeatureConfig(families, int(feats.get("min_df", 2))),
            lexicon=lexicon,
            phrases=phrases,
            C=float(clf.get("C", 1.0)),
            tol=float(clf.get("tol", 1e-6)),
            max_iter=int(clf.get("max_iter", 1000)),
            ratio=int(self.section("sampling").get("ratio", 3)),
            threshold=float(clf.get("threshold", 0.5)),
        )


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return (isinstance(v, (int, float)) and not isinstance(v, bool)) and not math.isnan(v)


def validate_config(raw, base: Path, seed_override: Optional[int]) -> list[str]:
    """Every problem in the config, so they can be reported together."""
    if not isinstance(raw, dict):
        return ["config must be a JSON object"]
    errors = []
    seed = raw.get("seed") if seed_override is None else seed_override
    if seed is None:
        errors.append("seed: required (set it in the config or pass --seed)")
    elif not _is_int(seed) or seed < 0:
        errors.append(f"seed: must be a non-negative integer, got {seed!r}")

    paths = raw.get("paths", {})
    if not isinstance(paths, dict):
        errors.append("paths: must be an object")
        paths = {}
    for key in ("reviews", "products", "tasks"):
        if key not in paths:
            errors.append(f"paths.{key}: required")
    feats = raw.get("features", {})
    families = feats.get("families", []) if isinstance(feats, dict) else []
    if not isinstance(feats, dict):
        errors.append("features: must be an object")
    elif not isinstance(families, list) or not families:
        errors.append("features.families: must be a non-empty list")
        families = []
    else:
        for fam in families:
            if fam not in FAMILIES:
                errors.append(f"features.families: unknown family {fam!r} (known: {', '.join(FAMILIES)})")
        min_df = feats.get("min_df", 2)
        if not _is_int(min_df) or min_df < 1:
            errors.append(f"features.min_df: must be a positive integer, got {min_df!r}")
    if "lexicon" in families and "lexicon" not in paths:
        errors.append("paths.lexicon: required when the lexicon family is enabled")
    if "ad_phrases" in families and "phrases" not in paths:
        errors.append("paths.phrases: required when the ad_phrases family is enabled")
    for key, value in paths.items():
        if not isinstance(value, str):
            errors.append(f"paths.{key}: must be a string")
        elif not (base / value).is_file():
            errors.append(f"paths.{key}: file not found: {value}")

    clf = raw.get("classifier", {})
    c = clf.get("C", 1.0)
    if not _is_num(c) or c <= 0:
        errors.append(f"classifier.C: must be positive, got {c!r}")
    for key, default in (("tol", 1e-6), ("threshold", 0.5)):
        v = clf.get(key, default)
        if not _is_num(v) or v <= 0 or (key == "threshold" and v >= 1):
            errors.append(f"classifier.{key}: out of range, got {v!r}")
    max_iter = clf.get("max_iter", 1000)
    if not _is_int(max_iter) or max_iter < 1:
        errors.append(f"classifier.max_iter: must be a positive integer, got {max_iter!r}")
    ratio = raw.get("sampling", {}).get("ratio", 3)
    if not _is_int(ratio) or ratio < 1:
        errors.append(f"sampling.ratio: must be a positive integer, got {ratio!r}")
    em = raw.get("clustering", {}).get("max_iter", 50)
    if not _is_int(em) or em < 1:
        errors.append(f"clustering.max_iter: must be a positive integer, got {em!r}")

    proto = raw.get("protocol", {})
    k = proto.get("k", 5)
    if not _is_int(k) or k < 2:
        errors.append(f"protocol.k: must be an integer >= 2, got {k!r}")
    td = proto.get("train_domain", "Books")
    if td not in [d.value for d in FOUR_DOMAINS]:
        errors.append(f"protocol.train_domain: must be one of {', '.join(d.value for d in FOUR_DOMAINS)}, got {td!r}")
    fractions = proto.get("fractions", [0.0, 0.25, 0.5, 0.75, 1.0])
    if not isinstance(fractions, list) or not all(_is_num(f) and 0 <= f <= 1 for f in fractions):
        errors.append("protocol.fractions: must be a list of numbers in [0, 1]")
    tr, te = proto.get("train_reviewers", []), proto.get("test_reviewers", [])
    if not isinstance(tr, list) or not isinstance(te, list):
        errors.append("protocol.train_reviewers/test_reviewers: must be lists")
    elif set(tr) & set(te):
        errors.append("protocol: train_reviewers and test_reviewers overlap")
    return errors


def load_config(path: Path, seed: Optional[int] = None, out: Optional[str] = None) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise StageError(f"config file not found: {path}", 2) from None
    except json.JSONDecodeError as exc:
        raise StageError(f"{path}: invalid JSON ({exc})", 2) from None
    base = Path(path).resolve().parent
    errors = validate_config(raw, base, seed)
    if errors:
        raise StageError("invalid config:\n" + "\n".join(f"  - {e}" for e in errors), 2)
    out_dir = out if out is not None else raw.get("out", "opspam-run")
    return RunConfig(raw, base, seed if seed is not None else raw["seed"], Path(out_dir))


# -- artifacts -----------------------------------------------------------------

ARTIFACTS = {
    "reviews": ("corpus/reviews.jsonl", "ingested corpus", "ingest"),
    "products": ("corpus/products.jsonl", "ingested products", "ingest"),
    "tasks": ("corpus/tasks.jsonl", "ingested tasks", "ingest"),
    "reviewers": ("cluster/deceptive_reviewers.txt", "deceptive-reviewer list", "cluster"),
    "labeled": ("sieve/labeled.jsonl", "labeled corpus", "sieve"),
    "space": ("features/feature_space.txt", "feature manifest", "featurize"),
    "vectors": ("features/vectors.txt", "feature vectors", "featurize"),
    "model": ("model/model.txt", "model file", "train"),
}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Stage:
    """Bookkeeping for one command: required inputs, written outputs, manifest."""

    def __init__(self, name: str, cfg: RunConfig):
        self.name = name
        self.cfg = cfg
        self.inputs: dict[str, str] = {}
        self.outputs: list[str] = []

    def need(self, key: str) -> Path:
        rel, what, producer = ARTIFACTS[key]
        path = self.cfg.out / rel
        if not path.is_file():
            raise StageError(f"{self.name}: missing {what} ({rel}); run '{producer}' first", 2)
        self.inputs[rel] = _sha256(path)
        return path

    def source(self, key: str) -> Path:
        path = self.cfg.path(key)
        self.inputs[self.cfg.raw["paths"][key]] = _sha256(path)
        return path

    def write(self, rel: str, text: str) -> Path:
        path = self.cfg.out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="\n")
        self.outputs.append(rel)
        return path

    def write_records(self, rel: str, records) -> Path:
        path = self.cfg.out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        write_jsonl(path, records)
        self.outputs.append(rel)
        return path

    def finish(self, extra: Optional[dict] = None) -> None:
        for rel in self.outputs:
            path = self.cfg.out / rel
            if not path.is_file():
                raise StageError(f"{self.name}: output {rel} was not written")
        manifest = {
            "stage": self.name,
            "version": __version__,
            "seed": self.cfg.seed,
            "config_hash": self.cfg.hash,
            "config": self.cfg.effective(),
            "inputs": dict(sorted(self.inputs.items())),
            "outputs": {rel: _sha256(self.cfg.out / rel) for rel in sorted(self.outputs)},
        }
        if extra:
            manifest.update(extra)
        path = self.cfg.out / "manifests" / f"{self.name}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")
        log.info("%s: wrote %d file(s)", self.name, len(self.outputs))


def _products(stage: Stage):
    return load_products(stage.need("products"))


def _labeled(stage: Stage):
    corpus = load_labeled(stage.need("labeled"))
    corpus.products.update(_products(stage))
    return corpus


# -- commands ------------------------------------------------------------------

def cmd_ingest(cfg: RunConfig) -> None:
    st = Stage("ingest", cfg)
    reviews, products, reviewers = load_reviews(st.source("reviews"), st.source("products"))
    tasks = load_tasks(st.source("tasks"))
    missing = sorted({r.product_id for r in reviews} - set(products))
    if missing:
        log.warning("ingest: %d reviewed product(s) have no product record, e.g. %s", len(missing), missing[0])
    st.write_records("corpus/reviews.jsonl", (r.to_record() for r in sorted(reviews, key=lambda r: r.review_id)))
    st.write_records("corpus/products.jsonl", (products[k].to_record() for k in sorted(products)))
    st.write_records("corpus/tasks.jsonl", [{"product_id": pid, "responders": sorted(tasks.responders)}
                                            for pid in sorted(tasks.root_products)])
    st.finish({"counts": {"reviews": len(reviews), "products": len(products), "reviewers": len(reviewers),
                          "root_products": len(tasks.root_products)}})


def cmd_cluster(cfg: RunConfig) -> None:
    st = Stage("cluster", cfg)
    reviews, _, _ = load_reviews(st.need("reviews"))
    tasks = load_tasks(st.need("tasks"))
    em = cfg.section("clustering")
    graph = build_graph(reviews, tasks)
    result = em_cluster(graph, max_iter=int(em.get("max_iter", 50)), reg=float(em.get("reg", 1.0)))
    st.write("cluster/deceptive_reviewers.txt", "".join(r + "\n" for r in result.deceptive_reviewers()))
    st.write("cluster/assignment.tsv", format_assignment(result.assignment))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "energy", "prev_energy", "n_deceptive", "lambda", "mu", "bias"])
    for step in result.trace:
        p = step.params
        w.writerow([step.iteration, repr(step.energy), "" if step.prev_energy is None else repr(step.prev_energy),
                    step.n_deceptive, repr(p.lam), repr(p.mu), repr(p.bias)])
    st.write("cluster/em_trace.csv", buf.getvalue())
    st.write("cluster/graph_edges.txt", graph.dump_edges())
    st.write("cluster/graph_nodes.tsv", graph.dump_nodes())
    st.finish({"converged": result.converged, "iterations": result.iterations,
               "n_deceptive_reviewers": len(result.deceptive_reviewers())})


def cmd_sieve(cfg: RunConfig) -> None:
    st = Stage("sieve", cfg)
    reviews, _, _ = load_reviews(st.need("reviews"))
    products = _products(st)
    tasks = load_tasks(st.need("tasks"))
    flagged = st.need("reviewers").read_text(encoding="utf-8").split()
    corpus = sieve_labels(reviews, flagged, tasks, products)
    st.write_records("sieve/labeled.jsonl", (labeled_record(it) for it in corpus))
    stats = corpus_stats(corpus)
    st.write("sieve/stats.txt", stats.to_text())
    st.write("sieve/stats.csv", stats.to_csv())
    st.finish({"labels": {lab.value: n for lab, n in sorted(corpus.label_counts().items())}})


def _vectors_text(X, y, ids) -> str:
    X = X.tocsr()
    lines = []
    for k, rid in enumerate(ids):
        row = X.getrow(k)
        feats = " ".join(f"{j}:{v!r}" for j, v in zip(row.indices.tolist(), row.data.tolist()))
        lines.append(f"{rid} {int(y[k])} {feats}".rstrip())
    return "\n".join(lines) + "\n"


def _read_vectors(text: str, dim: int):
    rows, cols, vals, y, ids = [], [], [], [], []
    for k, line in enumerate(text.splitlines()):
        parts = line.split()
        ids.append(parts[0])
        y.append(int(parts[1]))
        for item in parts[2:]:
            j, v = item.split(":")
            rows.append(k)
            cols.append(int(j))
            vals.append(float(v))
    X = sp.csr_matrix((vals, (rows, cols)), shape=(len(y), dim))
    return X, np.array(y, dtype=int), ids


def cmd_featurize(cfg: RunConfig) -> None:
    st = Stage("featurize", cfg)
    corpus = _labeled(st)
    pipe = cfg.pipeline()
    sample = sample_truthful(corpus, pipe.ratio, cfg.seed)
    items = sorted(sample.items, key=lambda it: it.review_id)
    space = FeatureSpace.fit(items, pipe.features, pipe.lexicon, pipe.phrases)
    X, y = space.transform(items, corpus.products)
    text = space.to_text()
    if FeatureSpace.from_text(text).hash() != space.hash():
        raise StageError("featurize: feature manifest failed to round-trip")
    st.write("features/feature_space.txt", text)
    st.write("features/vectors.txt", _vectors_text(X, y, [it.review_id for it in items]))
    st.finish({"dim": space.dim, "examples": len(items), "space_hash": space.hash()})


def cmd_train(cfg: RunConfig) -> None:
    st = Stage("train", cfg)
    space = FeatureSpace.from_text(st.need("space").read_text(encoding="utf-8"))
    X, y, _ = _read_vectors(st.need("vectors").read_text(encoding="utf-8"), space.dim)
    pipe = cfg.pipeline()
    model = train(X, y, C=pipe.C, tol=pipe.tol, max_iter=pipe.max_iter)
    text = model.to_text(space)
    MaxentModel.from_text(text, space)
    st.write("model/model.txt", text)
    acc = float((model.predict(X, pipe.threshold) == y).mean())
    st.finish({"space_hash": space.hash(), "iterations": model.iterations,
               "grad_norm": model.grad_norm, "training_accuracy": acc})


def cmd_eval(cfg: RunConfig, protocol: str) -> None:
    st = Stage(f"eval-{protocol}", cfg)
    corpus = _labeled(st)
    pipe = cfg.pipeline()
    proto = cfg.section("protocol")
    if protocol == "indomain":
        report = indomain_all(corpus, pipe, k=int(proto.get("k", 5)), seed=cfg.seed)
    elif protocol == "cross":
        report = cross_domain(corpus, pipe, bool(proto.get("augment_with_other", False)), seed=cfg.seed)
    elif protocol == "curve":
        report = learning_curve(corpus, Domain(proto.get("train_domain", "Books")), pipe,
                                proto.get("fractions", [0.0, 0.25, 0.5, 0.75, 1.0]), seed=cfg.seed)
        st.write("reports/curve.csv", report.curve_csv())
    else:
        report = reviewer_transfer(corpus, proto.get("train_reviewers", []), proto.get("test_reviewers", []),
                                   pipe, seed=cfg.seed)
    st.write(f"reports/{protocol}.txt", report.to_text())
    st.write(f"reports/{protocol}.csv", report.to_csv())
    st.write(f"reports/{protocol}.json", json.dumps(report.to_manifest(), indent=2, sort_keys=True) + "\n")
    st.finish()


def cmd_report(cfg: RunConfig) -> None:
    st = Stage("report", cfg)
    found = [p for p in PROTOCOLS if (cfg.out / f"reports/{p}.txt").is_file()]
    if not found:
        raise StageError("report: missing evaluation reports; run 'eval' first", 2)
    parts = []
    stats = cfg.out / "sieve/stats.txt"
    if stats.is_file():
        st.inputs["sieve/stats.txt"] = _sha256(stats)
        parts.append("== corpus ==\n" + stats.read_text(encoding="utf-8"))
    for p in found:
        rel = f"reports/{p}.txt"
        st.inputs[rel] = _sha256(cfg.out / rel)
        parts.append(f"== {p} ==\n" + (cfg.out / rel).read_text(encoding="utf-8"))
    st.write("reports/summary.txt", "\n".join(parts))
    st.finish()


def cmd_complexity(cfg: RunConfig, stream) -> None:
    """Per-review complexity vectors of the configured snapshot, as CSV on ``stream``."""
    reviews, _, _ = load_reviews(cfg.path("reviews"))
    rows = iter_profile_rows((r.review_id, [parse_cached(s) for s in r.sentences]) for r in reviews)
    csv.writer(stream, lineterminator="\n").writerows(rows)


def bundled_config() -> Path:
    """Path of the config for the fixture corpus shipped with the package."""
    return Path(str(resources.files("opspam").joinpath("data/fixture/config.json")))


# -- entry point -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="JSON run config")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", help="override the output directory")

    parser = argparse.ArgumentParser(prog="opspam", description="Deceptive review detection pipeline.")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common], help="validate and normalize the review snapshot")
    sub.add_parser("cluster", parents=[common], help="EM clustering of the reviewer graph")
    sub.add_parser("sieve", parents=[common], help="assign ground-truth labels")
    sub.add_parser("featurize", parents=[common], help="fit a feature space on the 1:ratio sample")
    sub.add_parser("train", parents=[common], help="train the MaxEnt model")
    ev = sub.add_parser("eval", parents=[common], help="run an evaluation protocol")
    ev.add_argument("protocol", choices=PROTOCOLS)
    sub.add_parser("report", parents=[common], help="collect evaluation reports")
    sub.add_parser("complexity", parents=[common], help="print per-review complexity vectors as CSV")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.seed, args.out)
        if args.command == "eval":
            cmd_eval(cfg, args.protocol)
        elif args.command == "complexity":
            cmd_complexity(cfg, sys.stdout)
        else:
            globals()[f"cmd_{args.command}"](cfg)
    except StageError as exc:
        print(f"opspam: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, OSError) as exc:
        print(f"opspam {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
