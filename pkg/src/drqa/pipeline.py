"""Config-driven batch runs: generate or ingest data, reduce, score, plot.

A pipeline is a JSON document with a version, a global seed, and an
ordered stage list.  Stages publish named artifacts that later stages
reference; every file lands in the output directory and is listed in a
manifest.  Identical config and inputs yield byte-identical outputs.
"""

from __future__ import annotations

import csv
import hashlib
import inspect
import json
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import dimred
from .agreement import (
    WeightFunction,
    agreement_profile,
    partial_agreement,
    psi,
    weighted_psi,
)
from .geometry import Configuration, RankStructure, ranks_from_config
from .ingest import (
    impute_column_mean,
    ingest_csv,
    write_configuration,
    write_per_item,
    write_profile,
)
from .manifolds import ManifoldSpec, generate
from .viz import (
    PlotStyle,
    RenderSpec,
    order_by_first_coordinate,
    render_heatmap,
    render_lift,
    render_loess_overlay,
    render_scatter,
)

CONFIG_VERSION = 1
IMPUTATIONS = ("none", "column_mean")
STAGE_KINDS = ("generate", "ingest", "reduce", "agree", "plot")
PLOT_TYPES = ("scatter", "heatmap", "loess", "lift")

_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")

_SPEC_KEYS = {"config_side", "comparison", "eval_mode", "adjusted",
              "range_k", "aggregation", "param", "style"}
_STYLE_KEYS = {f.name for f in PlotStyle.__dataclass_fields__.values()}


class PipelineError(RuntimeError):
    """A stage failed; the stage's partial outputs have been removed."""

    def __init__(self, stage_name: str, kind: str, cause: Exception):
        super().__init__(f"stage {stage_name!r} ({kind}) failed: {cause}")
        self.stage_name = stage_name
        self.kind = kind


def _reject_unknown(obj: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ValueError(f"{where}: unknown keys {unknown}")


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ValueError(f"{where}: missing required key {key!r}")
    return obj[key]


# ---------------------------------------------------------------------------
# Stage records


@dataclass(frozen=True)
class GenerateStage:
    name: str
    shape: str
    n: int
    params: dict = field(default_factory=dict)
    kind: str = "generate"


@dataclass(frozen=True)
class IngestStage:
    name: str
    path: str
    has_header: bool = True
    missing_token: str = "NA"
    kind: str = "ingest"


@dataclass(frozen=True)
class ReduceStage:
    name: str
    source: str
    methods: tuple
    target_dim: int
    param_grid: tuple = ({},)
    kind: str = "reduce"

    def jobs(self):
        """Expanded (artifact name, method, params) triples."""
        out = []
        for m in self.methods:
            base = self.name if len(self.methods) == 1 else f"{self.name}_{m}"
            if len(self.param_grid) == 1:
                out.append((base, m, self.param_grid[0]))
            else:
                for i, params in enumerate(self.param_grid):
                    out.append((f"{base}_p{i}", m, params))
        return out


@dataclass(frozen=True)
class AgreeStage:
    name: str
    a: str
    b: tuple
    z: str | None = None
    per_item: bool = False
    range_k: tuple | None = None
    kind: str = "agree"

    def profile_keys(self):
        if len(self.b) == 1:
            return (self.name,)
        return tuple(f"{self.name}:{b}" for b in self.b)


@dataclass(frozen=True)
class PlotStage:
    name: str
    plot_type: str
    spec: RenderSpec
    profiles: tuple = ()
    embeddings: tuple = ()
    values: dict | None = None
    binary: bool = False
    order_by: str | None = None
    kind: str = "plot"


@dataclass(frozen=True)
class PipelineConfig:
    seed: int
    out_dir: Path
    stages: tuple
    imputation: str = "none"
    cache: bool = False
    scores: str | None = None


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    stage: str
    seed: int | None = None


# ---------------------------------------------------------------------------
# Score table


@dataclass(frozen=True)
class ScoreRow:
    technique: str
    params: dict
    k_range: str
    mean_agreement: float
    psi: float
    psi_weighted: float | None = None


@dataclass(frozen=True)
class ScoreTable:
    """Aggregate agreement per requested technique, parameters, and k range."""

    rows: tuple

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        seen = set()
        for row in self.rows:
            key = (row.technique, _params_json(row.params), row.k_range)
            if key in seen:
                raise ValueError(f"duplicate score row for {key}")
            seen.add(key)

    def write(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["technique", "params", "k_range",
                          "mean_agreement", "psi", "psi_weighted"])
            for r in self.rows:
                out.writerow([
                    r.technique, _params_json(r.params), r.k_range,
                    repr(float(r.mean_agreement)), repr(float(r.psi)),
                    "" if r.psi_weighted is None else repr(float(r.psi_weighted)),
                ])


def _params_json(params: dict) -> str:
    return json.dumps(params, sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# Parsing


def _check_method_params(method: str, params: dict, where: str) -> None:
    fn = getattr(dimred, method)
    accepted = set(inspect.signature(fn).parameters)
    accepted -= {"config", "distances", "target_dim"}
    _reject_unknown(params, accepted, f"{where}: params for {method}")


def _parse_name(raw: dict, where: str, taken: set) -> str:
    name = _require(raw, "name", where)
    if not isinstance(name, str) or not _NAME_RE.match(name):
        raise ValueError(f"{where}: name {name!r} is not a valid identifier")
    if name in taken:
        raise ValueError(f"{where}: name {name!r} is already in use")
    return name


def _parse_range_k(raw, where: str):
    if raw is None:
        return None
    if (not isinstance(raw, (list, tuple)) or len(raw) != 2
            or not all(isinstance(v, int) for v in raw)):
        raise ValueError(f"{where}: range_k must be [lo, hi]")
    lo, hi = raw
    if not 1 <= lo <= hi:
        raise ValueError(f"{where}: range_k bounds must satisfy 1 <= lo <= hi")
    return (lo, hi)


def _parse_render_spec(raw: dict, where: str) -> RenderSpec:
    _reject_unknown(raw, _SPEC_KEYS, where)
    kw = dict(raw)
    style_raw = kw.pop("style", {})
    _reject_unknown(style_raw, _STYLE_KEYS, f"{where}: style")
    if "range_k" in kw and kw["range_k"] is not None:
        kw["range_k"] = tuple(kw["range_k"])
    return RenderSpec(style=PlotStyle(**style_raw), **kw)


def parse_config(obj: dict, base_dir=".") -> PipelineConfig:
    """Validate a raw JSON object into a PipelineConfig.

    Unknown keys anywhere in the document are rejected, stage names must
    be unique, and every cross-stage reference must point at an artifact
    defined by an earlier stage.
    """
    base_dir = Path(base_dir)
    _reject_unknown(obj, {"version", "seed", "out_dir", "imputation",
                          "cache", "scores", "stages"}, "config")
    version = _require(obj, "version", "config")
    if version != CONFIG_VERSION:
        raise ValueError(f"config: unsupported version {version!r}")
    seed = obj.get("seed", 0)
    if not isinstance(seed, int):
        raise ValueError("config: seed must be an integer")
    imputation = obj.get("imputation", "none")
    if imputation not in IMPUTATIONS:
        raise ValueError(f"config: imputation must be one of {IMPUTATIONS}")
    cache = obj.get("cache", False)
    if not isinstance(cache, bool):
        raise ValueError("config: cache must be a boolean")
    scores = obj.get("scores")
    if scores is not None and (not isinstance(scores, str)
                               or not _NAME_RE.match(scores)):
        raise ValueError("config: scores must be a simple file name")
    raw_stages = obj.get("stages", [])
    if not isinstance(raw_stages, list):
        raise ValueError("config: stages must be a list")

    taken: set = set()
    configurations: set = set()
    profile_keys: set = set()
    per_item_keys: set = set()
    stages = []
    for idx, raw in enumerate(raw_stages):
        if not isinstance(raw, dict):
            raise ValueError(f"stage {idx}: must be an object")
        kind = _require(raw, "kind", f"stage {idx}")
        if kind not in STAGE_KINDS:
            raise ValueError(f"stage {idx}: unknown kind {kind!r}")
        where = f"stage {idx} ({kind})"
        name = _parse_name(raw, where, taken)
        taken.add(name)

        if kind == "generate":
            _reject_unknown(raw, {"kind", "name", "shape", "n", "params"}, where)
            shape = _require(raw, "shape", where)
            n = _require(raw, "n", where)
            params = dict(raw.get("params", {}))
            ManifoldSpec(shape, n, 0, params)  # fail fast on bad arguments
            stages.append(GenerateStage(name, shape, int(n), params))
            configurations.add(name)

        elif kind == "ingest":
            _reject_unknown(raw, {"kind", "name", "path", "has_header",
                                  "missing_token"}, where)
            path = _require(raw, "path", where)
            stages.append(IngestStage(
                name, str(base_dir / path),
                has_header=bool(raw.get("has_header", True)),
                missing_token=str(raw.get("missing_token", "NA")),
            ))
            configurations.add(name)

        elif kind == "reduce":
            _reject_unknown(raw, {"kind", "name", "source", "method",
                                  "methods", "target_dim", "params",
                                  "param_grid"}, where)
            source = _require(raw, "source", where)
            if source not in configurations:
                raise ValueError(f"{where}: unknown source {source!r}")
            if ("method" in raw) == ("methods" in raw):
                raise ValueError(f"{where}: give exactly one of method/methods")
            methods = tuple(raw.get("methods", [raw.get("method")]))
            for m in methods:
                if m not in dimred.METHODS:
                    raise ValueError(f"{where}: unknown method {m!r}")
            if len(set(methods)) != len(methods):
                raise ValueError(f"{where}: duplicate methods")
            if "params" in raw and "param_grid" in raw:
                raise ValueError(f"{where}: give only one of params/param_grid")
            if "param_grid" in raw:
                grid = tuple(dict(p) for p in raw["param_grid"])
                if not grid:
                    raise ValueError(f"{where}: param_grid must not be empty")
            else:
                grid = (dict(raw.get("params", {})),)
            target_dim = _require(raw, "target_dim", where)
            if not isinstance(target_dim, int) or target_dim < 1:
                raise ValueError(f"{where}: target_dim must be a positive integer")
            for m in methods:
                for params in grid:
                    _check_method_params(m, params, where)
            stage = ReduceStage(name, source, methods, target_dim, grid)
            for emit_name, _, _ in stage.jobs():
                if emit_name != name and emit_name in taken:
                    raise ValueError(f"{where}: artifact {emit_name!r} collides")
                taken.add(emit_name)
                configurations.add(emit_name)
            stages.append(stage)

        elif kind == "agree":
            _reject_unknown(raw, {"kind", "name", "a", "b", "z",
                                  "per_item", "range_k"}, where)
            a = _require(raw, "a", where)
            b_raw = _require(raw, "b", where)
            b = tuple(b_raw) if isinstance(b_raw, list) else (b_raw,)
            if not b:
                raise ValueError(f"{where}: b must name at least one artifact")
            z = raw.get("z")
            for ref in (a, *b, *( [z] if z is not None else [] )):
                if ref not in configurations:
                    raise ValueError(f"{where}: unknown artifact {ref!r}")
            stage = AgreeStage(
                name, a, b, z=z,
                per_item=bool(raw.get("per_item", False)),
                range_k=_parse_range_k(raw.get("range_k"), where),
            )
            for key in stage.profile_keys():
                profile_keys.add(key)
                if stage.per_item:
                    per_item_keys.add(key)
            stages.append(stage)

        else:  # plot
            common = {"kind", "name", "type", "spec"}
            plot_type = _require(raw, "type", where)
            if plot_type not in PLOT_TYPES:
                raise ValueError(f"{where}: unknown plot type {plot_type!r}")
            spec = _parse_render_spec(raw.get("spec", {}), where)
            if plot_type == "lift":
                _reject_unknown(raw, common | {"profiles"}, where)
                refs = tuple(_require(raw, "profiles", where))
                if not refs:
                    raise ValueError(f"{where}: profiles must not be empty")
                for ref in refs:
                    if ref not in profile_keys:
                        raise ValueError(f"{where}: unknown profile {ref!r}")
                stages.append(PlotStage(name, plot_type, spec, profiles=refs))
            else:
                allowed = common | {"embeddings", "values"}
                if plot_type == "heatmap":
                    allowed |= {"binary", "order_by"}
                _reject_unknown(raw, allowed, where)
                values = None
                if plot_type == "heatmap" or "values" in raw:
                    values = dict(_require(raw, "values", where))
                    _reject_unknown(values, {"agree", "k"}, f"{where}: values")
                    ref = _require(values, "agree", f"{where}: values")
                    if ref not in per_item_keys:
                        raise ValueError(
                            f"{where}: {ref!r} is not an agree artifact "
                            "with per-item output"
                        )
                embeddings = ()
                if plot_type != "heatmap":
                    embeddings = tuple(_require(raw, "embeddings", where))
                    limit = 1 if plot_type == "loess" else 2
                    if not 1 <= len(embeddings) <= limit:
                        raise ValueError(
                            f"{where}: expected 1..{limit} embeddings"
                        )
                    for ref in embeddings:
                        if ref not in configurations:
                            raise ValueError(
                                f"{where}: unknown embedding {ref!r}"
                            )
                    if values is None:
                        raise ValueError(f"{where}: missing required key 'values'")
                order_by = raw.get("order_by")
                if order_by is not None and order_by not in configurations:
                    raise ValueError(f"{where}: unknown embedding {order_by!r}")
                stages.append(PlotStage(
                    name, plot_type, spec,
                    embeddings=embeddings, values=values,
                    binary=bool(raw.get("binary", False)),
                    order_by=order_by,
                ))

    out_dir = base_dir / obj.get("out_dir", "out")
    return PipelineConfig(seed=seed, out_dir=out_dir, stages=tuple(stages),
                          imputation=imputation, cache=cache, scores=scores)


def load_config(path) -> PipelineConfig:
    path = Path(path)
    with path.open() as fh:
        obj = json.load(fh)
    return parse_config(obj, base_dir=path.parent)


# ---------------------------------------------------------------------------
# Execution


def _worker_count() -> int | None:
    raw = os.environ.get("DRQA_THREADS", "0")
    try:
        value = int(raw)
    except ValueError:
        raise ValueError("DRQA_THREADS must be an integer") from None
    if value < 0:
        raise ValueError("DRQA_THREADS must be >= 0")
    return None if value == 0 else value


class _RankCache:
    """Rank structures per artifact, optionally persisted on disk."""

    def __init__(self, directory: Path | None):
        self.directory = directory
        self.memory: dict = {}
        if directory is not None:
            directory.mkdir(parents=True, exist_ok=True)

    def ranks_for(self, name: str, config: Configuration) -> RankStructure:
        if name in self.memory:
            return self.memory[name]
        structure = None
        disk = None
        if self.directory is not None:
            digest = hashlib.sha256(config.items.tobytes()).hexdigest()[:24]
            disk = self.directory / f"ranks_{digest}.npz"
            if disk.exists():
                loaded = np.load(disk)
                structure = RankStructure(
                    loaded["ranks"], loaded["neighbors"],
                    tie_policy={"restored": True},
                )
        if structure is None:
            structure = ranks_from_config(config)
            if disk is not None and not disk.exists():
                np.savez(disk, ranks=structure.ranks,
                         neighbors=structure.neighbors)
        self.memory[name] = structure
        return structure


def run_pipeline(config: PipelineConfig):
    """Execute all stages and return the manifest entries.

    Randomized stages derive their seed from the global seed plus their
    stage index.  A failing stage removes whatever files it had begun to
    write and aborts with a PipelineError naming the stage.
    """
    out_dir = config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = _worker_count()
    rank_cache = _RankCache(out_dir / ".cache" if config.cache else None)

    configurations: dict = {}
    reduce_meta: dict = {}
    profiles: dict = {}
    per_item: dict = {}
    score_rows: list = []
    manifest: list = []

    def run_stage(stage, stage_seed, record):
        if stage.kind == "generate":
            spec = ManifoldSpec(stage.shape, stage.n, stage_seed, stage.params)
            data = generate(spec)
            configurations[stage.name] = data
            record(_write_config(data, stage.name))
        elif stage.kind == "ingest":
            data = ingest_csv(stage.path, has_header=stage.has_header,
                              missing_token=stage.missing_token)
            if config.imputation == "column_mean":
                data = impute_column_mean(data)
            configurations[stage.name] = data
            record(_write_config(data, stage.name))
        elif stage.kind == "reduce":
            source = configurations[stage.source]
            jobs = stage.jobs()

            def run_job(job):
                emit_name, method, params = job
                request = dimred.ReductionRequest(
                    method, stage.target_dim, params, seed=stage_seed)
                return emit_name, method, params, \
                    dimred.run_reduction(request, source)

            if len(jobs) > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    results = list(pool.map(run_job, jobs))
            else:
                results = [run_job(jobs[0])]
            for emit_name, method, params, result in results:
                configurations[emit_name] = result.embedding
                reduce_meta[emit_name] = (method, params)
                record(_write_config(result.embedding, emit_name))
        elif stage.kind == "agree":
            _run_agree(stage, record)
        else:
            _run_plot(stage, record)

    def _write_config(data, name):
        path = out_dir / f"{name}.csv"
        write_configuration(data, path)
        return path

    def _run_agree(stage, record):
        ranks_a = rank_cache.ranks_for(stage.a, configurations[stage.a])
        single = len(stage.b) == 1
        for b_name in stage.b:
            ranks_b = rank_cache.ranks_for(b_name, configurations[b_name])
            prof = agreement_profile(ranks_a, ranks_b,
                                     with_per_item=stage.per_item)
            key = stage.name if single else f"{stage.name}:{b_name}"
            file_base = stage.name if single else f"{stage.name}_{b_name}"
            profiles[key] = prof
            path = out_dir / f"{file_base}.csv"
            write_profile(prof, path)
            record(path)

            n = prof.n
            lo, hi = stage.range_k or (1, n - 1)
            if hi > n - 1:
                raise ValueError(
                    f"range_k upper bound {hi} exceeds n-1 = {n - 1}")
            ks = tuple(range(lo, hi + 1))
            if stage.per_item:
                matrix = prof.per_item[:, lo - 1:hi]
                per_item[key] = (ks, matrix)
                item_path = out_dir / f"{file_base}_items.csv"
                labels = configurations[stage.a].labels
                write_per_item(ks, matrix, item_path, labels=labels)
                record(item_path)
            if stage.z is not None:
                ranks_z = rank_cache.ranks_for(stage.z,
                                               configurations[stage.z])
                psi_ab = psi(prof)
                psi_az = psi(agreement_profile(ranks_a, ranks_z))
                psi_bz = psi(agreement_profile(ranks_b, ranks_z))
                partial = partial_agreement(psi_ab, psi_az, psi_bz)
                partial_path = out_dir / f"{file_base}_partial.csv"
                with partial_path.open("w", newline="") as fh:
                    out = csv.writer(fh)
                    out.writerow(["psi_ab", "psi_az", "psi_bz",
                                  "partial_agreement"])
                    out.writerow([repr(psi_ab), repr(psi_az),
                                  repr(psi_bz), repr(partial)])
                record(partial_path)

            technique, params = reduce_meta.get(b_name, (b_name, {}))
            row_params = {"dataset": stage.a, "embedding": b_name, **params}
            mean_agreement = float(prof.ar[lo - 1:hi].mean())
            psi_f = None
            if n >= 4:
                psi_f = weighted_psi(prof, WeightFunction.linear_taper(n))
            score_rows.append(ScoreRow(
                technique, row_params, f"{lo}-{hi}",
                mean_agreement, psi(prof), psi_f,
            ))

    def _values_for(stage):
        ks, matrix = per_item[stage.values["agree"]]
        if "k" in stage.values:
            k = int(stage.values["k"])
            if k not in ks:
                raise ValueError(f"k = {k} not among stored columns {ks}")
            return matrix[:, ks.index(k)]
        return matrix.mean(axis=1)

    def _run_plot(stage, record):
        if stage.plot_type == "lift":
            named = {ref: profiles[ref] for ref in stage.profiles}
            text = render_lift(named, stage.spec)
        elif stage.plot_type == "scatter":
            embeds = [configurations[ref] for ref in stage.embeddings]
            text = render_scatter(
                embeds if len(embeds) > 1 else embeds[0],
                _values_for(stage), stage.spec)
        elif stage.plot_type == "loess":
            text = render_loess_overlay(
                configurations[stage.embeddings[0]],
                _values_for(stage), stage.spec)
        else:
            ks, matrix = per_item[stage.values["agree"]]
            spec = stage.spec
            if spec.range_k is None:
                spec = replace(spec, range_k=ks)
            order = None
            if stage.order_by is not None:
                order = order_by_first_coordinate(
                    configurations[stage.order_by])
            text = render_heatmap(matrix, item_order=order, spec=spec,
                                  binary=stage.binary)
        path = out_dir / f"{stage.name}.svg"
        path.write_text(text)
        record(path)

    for idx, stage in enumerate(config.stages):
        stage_seed = config.seed + idx
        randomized = stage.kind in ("generate", "reduce")
        written: list = []

        def record(path, written=written, stage=stage,
                   stage_seed=stage_seed, randomized=randomized):
            written.append(path)
            manifest.append(ManifestEntry(
                path.relative_to(out_dir).as_posix(), stage.name,
                stage_seed if randomized else None))

        try:
            run_stage(stage, stage_seed, record)
        except Exception as exc:
            for path in written:
                Path(path).unlink(missing_ok=True)
            raise PipelineError(stage.name, stage.kind, exc) from exc

    if config.scores is not None:
        table = ScoreTable(tuple(score_rows))
        path = out_dir / config.scores
        table.write(path)
        manifest.append(ManifestEntry(
            path.relative_to(out_dir).as_posix(), "scores", None))

    payload = {
        "version": CONFIG_VERSION,
        "outputs": [
            {"path": e.path, "stage": e.stage, "seed": e.seed}
            for e in manifest
        ],
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return manifest
