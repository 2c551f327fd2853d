"""End-to-end orchestration: ingest -> sample/split -> train -> validate ->
cluster -> metrics -> project -> report, with persisted intermediate artifacts.

Every stage writes its outputs atomically (temp file + rename) and records a
machine-readable summary (input checksums, seed, duration) under
``summaries/``. Artifact bytes are deterministic for a fixed config and seed
in single-worker mode; summaries are provenance metadata and carry timings.
"""

from __future__ import annotations

import dataclasses
import hashlib
import io
import json
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import clustering as cl
from . import graph as gr
from . import metrics as mt
from . import projection as pj
from . import report as rp
from . import validation as vl
from .embedding import TrainConfig, load_table, save_table, train_embeddings
from .errors import DependencyError, UsageError
from .synthetic import SyntheticSpec, generate_synthetic

STAGES = (
    "ingest",
    "stats",
    "sample",
    "split",
    "train",
    "validate",
    "cluster",
    "metrics",
    "project",
    "report",
)

OUTPUT_ROOT_ENV = "RELSUB_OUT"


@dataclass
class RunConfig:
    input_path: str | None = None
    input_format: str = gr.CONCEPTNET_DUMP
    drop_relations: tuple[str, ...] = (gr.EXTERNAL_URL,)
    skip_bad_lines: bool = False
    sample_size: int | None = None
    sample_id_list: str | None = None
    split_ratios: tuple[float, float, float] = gr.DEFAULT_SPLIT_RATIOS
    train: TrainConfig = field(default_factory=TrainConfig)
    target_relations: tuple[str, ...] = ()
    k: int | None = None
    k_range: tuple[int, int] = (2, 40)
    restarts: int = 10
    kmeans_init: str = "random"
    max_iter: int = 300
    suggest_by: str = "silhouette_max_k"
    min_relation_triples: int = 10
    projection_method: str = "tsne"
    perplexity: float = 30.0
    projection_iterations: int = 1000
    report_samples: int = 5
    seed: int = 0
    output_dir: str = ""
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        raw = dict(raw)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        seed = int(raw.get("seed", 0))
        train_raw = dict(raw.pop("train", {}))
        train_raw.setdefault("seed", seed + 2)
        try:
            raw["train"] = TrainConfig(**train_raw)
        except TypeError as e:
            raise UsageError(f"bad train config: {e}") from None
        synth_raw = dict(raw.pop("synthetic", {}))
        try:
            raw["synthetic"] = SyntheticSpec(**synth_raw)
        except TypeError as e:
            raise UsageError(f"bad synthetic config: {e}") from None
        for key in ("drop_relations", "target_relations"):
            if key in raw:
                raw[key] = tuple(raw[key])
        if "split_ratios" in raw:
            raw["split_ratios"] = tuple(raw["split_ratios"])
        if "k_range" in raw:
            raw["k_range"] = tuple(raw["k_range"])
        return cls(**raw)

    def validate(self) -> None:
        if self.input_format not in gr.FORMATS:
            raise UsageError(f"unknown input format {self.input_format!r}")
        if self.sample_size is not None and self.sample_size < 0:
            raise UsageError("sample_size must be >= 0")
        if len(self.split_ratios) != 3 or any(r <= 0 for r in self.split_ratios):
            raise UsageError("split_ratios must be three positive numbers")
        if abs(sum(self.split_ratios) - 1.0) > 1e-9:
            raise UsageError("split_ratios must sum to 1")
        if self.k is not None and self.k < 1:
            raise UsageError("k must be >= 1")
        if len(self.k_range) != 2 or self.k_range[0] < 2 or self.k_range[1] < self.k_range[0]:
            raise UsageError("k_range must be (lo, hi) with 2 <= lo <= hi")
        if self.restarts < 1:
            raise UsageError("restarts must be >= 1")
        if self.report_samples < 0:
            raise UsageError("report_samples must be >= 0")
        if self.projection_method not in ("tsne", "pca"):
            raise UsageError(f"unknown projection method {self.projection_method!r}")
        if not self.output_dir:
            raise UsageError("output_dir is required (flag --out or RELSUB_OUT)")
        try:
            self.train.validate()
            self.synthetic.validate()
        except ValueError as e:
            raise UsageError(str(e)) from None

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return d


def relation_slug(relation: str) -> str:
    return relation.strip("/").replace("/", "_")


class Workspace:
    """Resolves artifact paths under one output directory."""

    def __init__(self, output_dir: str | Path):
        self.root = Path(output_dir)

    def graph_dir(self, name: str) -> Path:
        return self.root / "graph" / name

    @property
    def stats_path(self) -> Path:
        return self.root / "graph" / "stats.json"

    @property
    def labels_path(self) -> Path:
        return self.root / "graph" / "labels.tsv"

    @property
    def embeddings_path(self) -> Path:
        return self.root / "embeddings" / "embeddings.bin"

    @property
    def losses_path(self) -> Path:
        return self.root / "embeddings" / "epoch_losses.tsv"

    @property
    def validation_dir(self) -> Path:
        return self.root / "validation"

    def clusters_dir(self, relation: str) -> Path:
        return self.root / "clusters" / relation_slug(relation)

    def metrics_dir(self, relation: str) -> Path:
        return self.root / "metrics" / relation_slug(relation)

    def plots_dir(self, relation: str) -> Path:
        return self.root / "plots" / relation_slug(relation)

    def reports_dir(self, relation: str) -> Path:
        return self.root / "reports" / relation_slug(relation)

    def summary_path(self, stage: str) -> Path:
        return self.root / "summaries" / f"{stage}.json"

    def cluster_relations(self) -> list[str]:
        base = self.root / "clusters"
        if not base.is_dir():
            return []
        return sorted(p.name for p in base.iterdir() if (p / "clustering.json").is_file())


def write_atomic(path: Path, data: bytes | str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode, **({} if isinstance(data, bytes) else {"newline": "\n"})) as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def require(path: Path) -> Path:
    if not path.exists():
        raise DependencyError(path)
    return path


def _require_sample_dir(ws: Workspace, *names: str) -> Path:
    for name in names:
        candidate = ws.graph_dir(name)
        if (candidate / "triples.tsv").is_file():
            return candidate
    raise DependencyError(ws.graph_dir(names[0]) / "triples.tsv")


def _save_sample_atomic(sample: gr.GraphSample, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    lines_t = "".join(f"{t.head}\t{t.relation}\t{t.tail}\t{t.meta}\n" for t in sample.triples)
    write_atomic(directory / "triples.tsv", lines_t)
    write_atomic(
        directory / "entities.tsv",
        "".join(f"{i}\t{u}\n" for i, u in enumerate(sample.entities_by_id())),
    )
    write_atomic(
        directory / "relations.tsv",
        "".join(f"{i}\t{u}\n" for i, u in enumerate(sample.relations_by_id())),
    )


class StageRecorder:
    def __init__(self, ws: Workspace, stage: str, config: RunConfig):
        self.ws = ws
        self.stage = stage
        self.config = config
        self.inputs: dict[str, str] = {}
        self.outputs: list[str] = []
        self.notes: dict = {}
        self._start = time.monotonic()

    def add_input(self, path: Path) -> None:
        self.inputs[str(path)] = sha256_file(path)

    def add_output(self, path: Path) -> None:
        self.outputs.append(str(path))

    def finish(self) -> dict:
        summary = {
            "stage": self.stage,
            "seed": self.config.seed,
            "inputs": self.inputs,
            "outputs": sorted(self.outputs),
            "notes": self.notes,
            "duration_seconds": round(time.monotonic() - self._start, 6),
        }
        write_atomic(self.ws.summary_path(self.stage), json.dumps(summary, indent=2, sort_keys=True) + "\n")
        return summary


def stage_synth(config: RunConfig) -> dict:
    ws = Workspace(config.output_dir)
    rec = StageRecorder(ws, "synth", config)
    sample, labels = generate_synthetic(config.synthetic, seed=config.seed)
    out_dir = ws.graph_dir("sample")
    _save_sample_atomic(sample, out_dir)
    write_atomic(ws.labels_path, "".join(f"{i}\t{label}\n" for i, label in enumerate(labels)))
    for name in ("triples.tsv", "entities.tsv", "relations.tsv"):
        rec.add_output(out_dir / name)
    rec.add_output(ws.labels_path)
    rec.notes.update(
        num_triples=len(sample.triples),
        num_entities=sample.num_entities,
        spec=dataclasses.asdict(config.synthetic),
    )
    return rec.finish()


def stage_ingest(config: RunConfig) -> dict:
    if not config.input_path:
        raise UsageError("ingest requires input_path")
    input_path = Path(config.input_path)
    if not input_path.is_file():
        raise UsageError(f"input file not found: {input_path}")
    ws = Workspace(config.output_dir)
    rec = StageRecorder(ws, "ingest", config)
    rec.add_input(input_path)
    skipped: list[int] = []
    with open(input_path, encoding="utf-8") as f:
        triples = gr.parse_assertions(
            f, config.input_format, skip_bad_lines=config.skip_bad_lines, skipped=skipped
        )
    kept = gr.filter_relations(triples, drop=config.drop_relations)
    sample = gr.GraphSample.from_triples(kept)
    out_dir = ws.graph_dir("full")
    _save_sample_atomic(sample, out_dir)
    for name in ("triples.tsv", "entities.tsv", "relations.tsv"):
        rec.add_output(out_dir / name)
    rec.notes.update(
        parsed=len(triples),
        kept=len(kept),
        dropped_by_relation=len(triples) - len(kept),
        skipped_lines=len(skipped),
        drop_relations=list(config.drop_relations),
    )
    return rec.finish()


def stage_stats(config: RunConfig) -> dict:
    ws = Workspace(config.output_dir)
    rec = StageRecorder(ws, "stats", config)
    source = _require_sample_dir(ws, "sample", "full")
    rec.add_input(source / "triples.tsv")
    sample = gr.GraphSample.load(source)
    stats = gr.compute_stats(sample.triples)
    write_atomic(ws.stats_path, stats.to_json())
    rec.add_output(ws.stats_path)
    rec.notes.update(source=str(source), num_triples=stats.num_triples)
    return rec.finish()


def stage_sample(config: RunConfig) -> dict:
    ws = Workspace(config.output_dir)
    rec = StageRecorder(ws, "sample", config)
    if config.sample_id_list:
        # Exact replication path: select dump lines by assertion URI.
        if not config.input_path:
            raise UsageError("sample with an id list requires input_path (the raw dump)")
        id_path = Path(config.sample_id_list)
        if not id_path.is_file():
            raise UsageError(f"id list not found: {id_path}")
        rec.add_input(id_path)
        input_path = Path(config.input_path)
        if not input_path.is_file():
            raise UsageError(f"input file not found: {input_path}")
        rec.add_input(input_path)
        with open(id_path, encoding="utf-8") as f:
            wanted = {line.strip() for line in f if line.strip()}
        with open(input_path, encoding="utf-8") as f:
            lines = list(gr.filter_dump_by_assertion_ids(f, wanted))
        triples = gr.parse_assertions(lines, config.input_format, skip_bad_lines=config.skip_bad_lines)
        rec.notes.update(id_list_size=len(wanted), matched=len(triples))
    else:
        if config.sample_size is None:
            raise UsageError("sample requires sample_size (or sample_id_list)")
        source = _require_sample_dir(ws, "full")
        rec.add_input(source / "triples.tsv")
        full = gr.GraphSample.load(source)
        triples = gr.sample_triples(full.triples, config.sample_size, seed=config.seed)
        rec.notes.update(requested=config.sample_size, population=len(full.triples))
    sample = gr.GraphSample.from_triples(triples)
    out_dir = ws.graph_dir("sample")
    _save_sample_atomic(sample, out_dir)
    for name in ("triples.tsv", "entities.tsv", "relations.tsv"):
        rec.add_output(out_dir / name)
    rec.notes.update(sampled=len(triples))
    return rec.finish()


def stage_split(config: RunConfig) -> dict:
    ws = Workspace(config.output_dir)
    rec = StageRecorder(ws, "split", config)
    source = _require_sample_dir(ws, "sample", "full")
    rec.add_input(source / "triples.tsv")
    sample = gr.GraphSample.load(source)
    train, valid, test = gr.split_triples(sample.triples, config.split_ratios, seed=config.seed + 1)
    for name, part in (("train", train), ("valid", valid), ("test", test)):
        part_dir = ws.graph_dir(name)
        _save_sample_atomic(gr.GraphSample.from_triples(part), part_dir)
        rec.add_output(part_dir / "triples.tsv")
    rec.notes.update(sizes={"train": len(train), "valid": len(valid), "test": len(test)})
    return rec.finish()


def stage_train(config: RunConfig) -> dict:
    ws = Workspace(config.output_dir)
    rec = StageRecorder(ws, "train", config)
    source = _require_sample_dir(ws, "train")
    rec.add_input(source / "triples.tsv")
    sample = gr.GraphSample.load(source)
    result = train_embeddings(sample, config.train)
    ws.embeddings_path.parent.mkdir(parents=True, exist_ok=True)
    tmp = ws.embeddings_path.with_suffix(".bin.tmp")
    save_table(result.table, tmp)
    os.replace(tmp, ws.embeddings_path)
    write_atomic(
        ws.losses_path,
        "epoch\tavg_loss\n"
        + "".join(f"{i}\t{loss:.8f}\n" for i, loss in enumerate(result.epoch_losses, start=1)),
    )
    rec.add_output(ws.embeddings_path)
    rec.add_output(ws.losses_path)
    rec.notes.update(
        train_config=dataclasses.asdict(config.train),
        epochs=len(result.epoch_losses),
        first_epoch_loss=result.epoch_losses[0] if result.epoch_losses else None,
        final_epoch_loss=result.epoch_losses[-1] if result.epoch_losses else None,
    )
    return rec.finish()


def stage_validate(config: RunConfig) -> dict:
    ws = Workspace(config.output_dir)
    rec = StageRecorder(ws, "validate", config)
    rec.add_input(require(ws.embeddings_path))
    source = _require_sample_dir(ws, "train")
    rec.add_input(source / "triples.tsv")
    table = load_table(ws.embeddings_path)
    sample = gr.GraphSample.load(source)
    report = vl.validate_all(table, sample)
    tsv_path = ws.validation_dir / "relation_report.tsv"
    json_path = ws.validation_dir / "relation_report.json"
    write_atomic(tsv_path, report.to_tsv())
    write_atomic(json_path, report.to_json())
    rec.add_output(tsv_path)
    rec.add_output(json_path)
    rec.notes.update(relations=len(report.rows), skipped=len(report.skipped))
    return rec.finish()


def _resolve_relations(config: RunConfig, sample: gr.GraphSample) -> list[str]:
    if config.target_relations:
        missing = [r for r in config.target_relations if r not in sample.relation_index]
        if missing:
            raise UsageError(f"target relations not in the training sample: {missing}")
        return list(config.target_relations)
    counts: dict[str, int] = {}
    for t in sample.triples:
        counts[t.relation] = counts.get(t.relation, 0) + 1
    minimum = max(config.min_relation_triples, (config.k or config.k_range[0]) + 1)
    return sorted(r for r, c in counts.items() if c >= minimum)


def stage_cluster(config: RunConfig) -> dict:
    ws = Workspace(config.output_dir)
    rec = StageRecorder(ws, "cluster", config)
    rec.add_input(require(ws.embeddings_path))
    source = _require_sample_dir(ws, "train")
    rec.add_input(source / "triples.tsv")
    table = load_table(ws.embeddings_path)
    sample = gr.GraphSample.load(source)
    relations = _resolve_relations(config, sample)
    if not relations:
        raise UsageError("no relation has enough triples to cluster")
    per_relation = {}
    for relation in relations:
        ts = vl.translation_vectors(table, sample, relation)
        n = len(ts)
        out_dir = ws.clusters_dir(relation)
        out_dir.mkdir(parents=True, exist_ok=True)

        buf = _npy_bytes(ts.vectors)
        write_atomic(out_dir / "translations.npy", buf)
        rec.add_output(out_dir / "translations.npy")
        write_atomic(
            out_dir / "triple_positions.tsv",
            "".join(f"{row}\t{pos}\n" for row, pos in enumerate(ts.triple_order)),
        )
        rec.add_output(out_dir / "triple_positions.tsv")

        info: dict = {"relation": relation, "num_points": n}
        if config.k is not None:
            chosen_k = config.k
        else:
            lo, hi = config.k_range
            hi = min(hi, n - 1)
            if lo > hi:
                raise UsageError(f"relation {relation}: k_range {config.k_range} infeasible for {n} points")
            curve = cl.k_sweep(
                ts.vectors,
                range(lo, hi + 1),
                restarts=config.restarts,
                seed=config.seed + 3,
                max_iter=config.max_iter,
                init=config.kmeans_init,
            )
            write_atomic(out_dir / "ksweep.tsv", curve.to_tsv())
            rec.add_output(out_dir / "ksweep.tsv")
            suggestions = curve.suggestions()
            info["suggestions"] = suggestions
            chosen_k = suggestions.get(config.suggest_by)
            if chosen_k is None:
                raise UsageError(f"unknown suggest_by {config.suggest_by!r}")
        if chosen_k > n:
            raise UsageError(f"relation {relation}: k={chosen_k} exceeds {n} points")
        clustering, best_seed = cl.kmeans_best_of(
            ts.vectors,
            chosen_k,
            restarts=config.restarts,
            seed=config.seed + 3,
            max_iter=config.max_iter,
            init=config.kmeans_init,
        )
        write_atomic(out_dir / "clustering.json", clustering.to_json())
        rec.add_output(out_dir / "clustering.json")
        info.update(
            k=chosen_k,
            best_seed=best_seed,
            converged=clustering.converged,
            iterations=clustering.iterations_run,
            wss=cl.wss(clustering, ts.vectors),
        )
        per_relation[relation] = info
    rec.notes.update(relations=per_relation)
    return rec.finish()


def _npy_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.save(buf, arr, allow_pickle=False)
    return buf.getvalue()


def _relation_cluster_artifacts(ws: Workspace) -> list[tuple[str, Path]]:
    slugs = ws.cluster_relations()
    if not slugs:
        raise DependencyError(ws.root / "clusters", "no clustering artifacts found; run the cluster stage first")
    return [(slug, ws.root / "clusters" / slug) for slug in slugs]


def stage_metrics(config: RunConfig) -> dict:
    ws = Workspace(config.output_dir)
    rec = StageRecorder(ws, "metrics", config)
    per_relation = {}
    for slug, cdir in _relation_cluster_artifacts(ws):
        rec.add_input(require(cdir / "clustering.json"))
        rec.add_input(require(cdir / "translations.npy"))
        clustering = cl.Clustering.from_json((cdir / "clustering.json").read_text())
        points = np.load(cdir / "translations.npy")
        quality = mt.cluster_quality(points, clustering.assignments, clustering.k)
        out_dir = ws.root / "metrics" / slug
        write_atomic(out_dir / "cluster_quality.tsv", quality.to_tsv())
        write_atomic(out_dir / "cluster_quality.json", quality.to_json())
        rec.add_output(out_dir / "cluster_quality.tsv")
        rec.add_output(out_dir / "cluster_quality.json")
        per_relation[slug] = quality.summary
    rec.notes.update(relations=per_relation)
    return rec.finish()


def stage_project(config: RunConfig) -> dict:
    ws = Workspace(config.output_dir)
    rec = StageRecorder(ws, "project", config)
    per_relation = {}
    for slug, cdir in _relation_cluster_artifacts(ws):
        rec.add_input(require(cdir / "clustering.json"))
        rec.add_input(require(cdir / "translations.npy"))
        clustering = cl.Clustering.from_json((cdir / "clustering.json").read_text())
        points = np.load(cdir / "translations.npy")
        n = len(points)
        if n < 4:
            per_relation[slug] = {"skipped": f"only {n} points"}
            continue
        perplexity = min(config.perplexity, max(1.0, (n - 2) / 3.0))
        proj = pj.project_2d(
            points,
            method=config.projection_method,
            perplexity=perplexity,
            iterations=config.projection_iterations,
            seed=config.seed + 4,
        )
        assignments = clustering.assignments
        out_dir = ws.root / "plots" / slug
        write_atomic(out_dir / "projection.tsv", proj.to_tsv(assignments))
        svg = rp.render_scatter(proj, assignments[proj.point_indices], k=clustering.k)
        write_atomic(out_dir / "scatter.svg", svg)
        rec.add_output(out_dir / "projection.tsv")
        rec.add_output(out_dir / "scatter.svg")
        info = {"method": config.projection_method, "perplexity": perplexity}
        if proj.kl_trace:
            info["final_kl"] = proj.kl_trace[-1][1]
        per_relation[slug] = info
    rec.notes.update(relations=per_relation)
    return rec.finish()


def stage_report(config: RunConfig) -> dict:
    ws = Workspace(config.output_dir)
    rec = StageRecorder(ws, "report", config)
    source = _require_sample_dir(ws, "train")
    rec.add_input(source / "triples.tsv")
    sample = gr.GraphSample.load(source)
    slug_to_relation = {relation_slug(r): r for r in sample.relations_by_id()}
    per_relation = {}
    for slug, cdir in _relation_cluster_artifacts(ws):
        rec.add_input(require(cdir / "clustering.json"))
        relation = slug_to_relation.get(slug)
        if relation is None:
            per_relation[slug] = {"skipped": "relation not in training sample"}
            continue
        clustering = cl.Clustering.from_json((cdir / "clustering.json").read_text())
        positions = [int(line.split("\t")[1]) for line in (cdir / "triple_positions.tsv").read_text().splitlines()]
        rel_triples = [sample.triples[i] for i in positions]
        quality = None
        quality_path = ws.root / "metrics" / slug / "cluster_quality.json"
        if quality_path.is_file():
            quality = _quality_rows_from_json(quality_path)
        report = rp.sample_cluster_triples(
            clustering.assignments,
            rel_triples,
            m=config.report_samples,
            seed=config.seed + 5,
            relation=relation,
            quality=quality,
        )
        out_dir = ws.reports_dir(relation)
        write_atomic(out_dir / "cluster_samples.md", report.to_markdown())
        rec.add_output(out_dir / "cluster_samples.md")
        per_relation[slug] = {"clusters": len(report.samples)}
    rec.notes.update(relations=per_relation)
    return rec.finish()


def _quality_rows_from_json(path: Path):
    payload = json.loads(path.read_text())

    @dataclass
    class _Row:
        cluster_id: int
        cohesion: float | None
        separation: float | None

    @dataclass
    class _Quality:
        rows: list

    rows = [
        _Row(cluster_id=row["cluster_id"], cohesion=row["cohesion"], separation=row["separation"])
        for row in payload.get("clusters", [])
    ]
    return _Quality(rows=rows)


STAGE_FUNCS = {
    "synth": stage_synth,
    "ingest": stage_ingest,
    "stats": stage_stats,
    "sample": stage_sample,
    "split": stage_split,
    "train": stage_train,
    "validate": stage_validate,
    "cluster": stage_cluster,
    "metrics": stage_metrics,
    "project": stage_project,
    "report": stage_report,
}


def run_stage(name: str, config: RunConfig) -> dict:
    if name not in STAGE_FUNCS:
        raise UsageError(f"unknown stage {name!r}")
    config.validate()
    return STAGE_FUNCS[name](config)


class OutputLock:
    """Advisory single-instance lock for one output directory."""

    def __init__(self, output_dir: str | Path):
        self.path = Path(output_dir) / ".relsub.lock"

    def __enter__(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise UsageError(
                f"output directory is locked by another pipeline run ({self.path}); "
                "remove the lock file if that run is gone"
            ) from None
        with os.fdopen(fd, "w") as f:
            f.write(str(os.getpid()))
        return self

    def __exit__(self, *exc):
        try:
            self.path.unlink()
        except FileNotFoundError:
            pass
        return False


def run_pipeline(config: RunConfig) -> list[dict]:
    """All stages in order, holding the output-directory lock."""
    config.validate()
    summaries = []
    with OutputLock(config.output_dir):
        for stage in STAGES:
            summaries.append(run_stage(stage, config))
    return summaries
