"""Command line entry points: generate, ingest, reduce, agree, plot, pipeline.

Each subcommand mirrors a pipeline stage and works on CSV/JSON files, so
single steps can run standalone without writing a config.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .agreement import agreement_profile, partial_agreement, psi
from .dimred import ReductionRequest, run_reduction
from .geometry import ranks_from_config
from .ingest import (
    impute_column_mean,
    ingest_csv,
    read_per_item,
    read_profile,
    write_configuration,
    write_per_item,
    write_profile,
)
from .manifolds import SHAPES, ManifoldSpec, generate
from .pipeline import (
    PLOT_TYPES,
    PipelineError,
    _check_method_params,
    _parse_render_spec,
    _reject_unknown,
    load_config,
    run_pipeline,
)
from .viz import (
    order_by_first_coordinate,
    render_heatmap,
    render_lift,
    render_loess_overlay,
    render_scatter,
)


def _json_dict(text: str, what: str) -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{what}: invalid JSON ({exc})") from None
    if not isinstance(obj, dict):
        raise ValueError(f"{what}: expected a JSON object")
    return obj


def _cmd_generate(args) -> None:
    params = _json_dict(args.params, "--params") if args.params else {}
    spec = ManifoldSpec(args.shape, args.n, args.seed, params)
    write_configuration(generate(spec), args.out)
    print(f"wrote {args.out}")


def _cmd_ingest(args) -> None:
    data = ingest_csv(args.in_path, has_header=not args.no_header,
                      missing_token=args.missing_token)
    if args.impute:
        data = impute_column_mean(data)
    write_configuration(data, args.out)
    print(f"wrote {args.out}")


def _cmd_reduce(args) -> None:
    params = _json_dict(args.params, "--params") if args.params else {}
    if args.transform is not None:
        params["transform"] = args.transform
    if args.n_neighbors is not None:
        params["n_neighbors"] = args.n_neighbors
    _check_method_params(args.method, params, "reduce")
    data = ingest_csv(args.in_path)
    request = ReductionRequest(args.method, args.dim, params, seed=args.seed)
    result = run_reduction(request, data)
    write_configuration(result.embedding, args.out)
    print(f"wrote {args.out}")


def _cmd_agree(args) -> None:
    config_a = ingest_csv(args.a)
    config_b = ingest_csv(args.b)
    ranks_a = ranks_from_config(config_a)
    ranks_b = ranks_from_config(config_b)
    profile = agreement_profile(ranks_a, ranks_b, with_per_item=args.per_item)
    write_profile(profile, args.out)
    print(f"wrote {args.out}")
    print(f"psi = {psi(profile)!r}")
    if args.per_item:
        items_path = Path(args.out).with_name(Path(args.out).stem + "_items.csv")
        ks = tuple(range(1, profile.n))
        write_per_item(ks, profile.per_item, items_path,
                       labels=config_a.labels)
        print(f"wrote {items_path}")
    if args.z is not None:
        ranks_z = ranks_from_config(ingest_csv(args.z))
        psi_az = psi(agreement_profile(ranks_a, ranks_z))
        psi_bz = psi(agreement_profile(ranks_b, ranks_z))
        partial = partial_agreement(psi(profile), psi_az, psi_bz)
        print(f"partial agreement given z = {partial!r}")


def _load_values(raw, base: Path):
    _reject_unknown(raw, {"per_item", "k"}, "plot spec: values")
    if "per_item" not in raw:
        raise ValueError("plot spec: values needs a per_item file")
    ks, matrix, _ = read_per_item(base / raw["per_item"])
    if "k" in raw:
        k = int(raw["k"])
        if k not in ks:
            raise ValueError(f"plot spec: k = {k} not among columns {ks}")
        return ks, matrix[:, ks.index(k)]
    return ks, matrix.mean(axis=1)


def _cmd_plot(args) -> None:
    spec_path = Path(args.spec)
    obj = _json_dict(spec_path.read_text(), str(spec_path))
    base = spec_path.parent
    render_spec = _parse_render_spec(obj.pop("spec", {}), "plot spec")

    if args.type == "lift":
        _reject_unknown(obj, {"profiles"}, "plot spec")
        raw = obj.get("profiles")
        if isinstance(raw, dict):
            named = {name: read_profile(base / p) for name, p in raw.items()}
        elif isinstance(raw, list) and raw:
            named = {Path(p).stem: read_profile(base / p) for p in raw}
        else:
            raise ValueError("plot spec: profiles must be a list or mapping")
        text = render_lift(named, render_spec)
    elif args.type == "scatter":
        _reject_unknown(obj, {"embeddings", "values"}, "plot spec")
        paths = obj.get("embeddings", [])
        if not 1 <= len(paths) <= 2:
            raise ValueError("plot spec: expected 1..2 embeddings")
        embeds = [ingest_csv(base / p) for p in paths]
        _, values = _load_values(obj.get("values", {}), base)
        text = render_scatter(embeds if len(embeds) > 1 else embeds[0],
                              values, render_spec)
    elif args.type == "loess":
        _reject_unknown(obj, {"embedding", "values"}, "plot spec")
        if "embedding" not in obj:
            raise ValueError("plot spec: missing embedding")
        embed = ingest_csv(base / obj["embedding"])
        _, values = _load_values(obj.get("values", {}), base)
        text = render_loess_overlay(embed, values, render_spec)
    else:  # heatmap
        _reject_unknown(obj, {"values", "binary", "order_by"}, "plot spec")
        ks, matrix, _ = read_per_item(
            base / obj.get("values", {}).get("per_item", ""))
        spec = render_spec
        if spec.range_k is None:
            spec = replace(spec, range_k=ks)
        order = None
        if "order_by" in obj:
            order = order_by_first_coordinate(ingest_csv(base / obj["order_by"]))
        text = render_heatmap(matrix, item_order=order, spec=spec,
                              binary=bool(obj.get("binary", False)))
    Path(args.out).write_text(text)
    print(f"wrote {args.out}")


def _cmd_pipeline(args) -> None:
    config = load_config(args.config)
    entries = run_pipeline(config)
    for entry in entries:
        print(f"wrote {(config.out_dir / entry.path).as_posix()}")
    print(f"wrote {(config.out_dir / 'manifest.json').as_posix()}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drqa",
        description="Generate data, reduce dimensionality, and score "
                    "rank agreement between configurations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample points from a reference shape")
    p.add_argument("--shape", required=True, choices=SHAPES)
    p.add_argument("--n", required=True, type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--params", help="shape parameters as a JSON object")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("ingest", help="normalize an external CSV")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--missing-token", default="NA")
    p.add_argument("--impute", action="store_true",
                   help="replace missing cells by column means")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("reduce", help="embed a dataset with one method")
    p.add_argument("--method", required=True)
    p.add_argument("--dim", required=True, type=int)
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--params", help="method parameters as a JSON object")
    p.add_argument("--transform", choices=["ratio", "ordinal"],
                   help="stress fitting transform (smacof variants)")
    p.add_argument("--n-neighbors", type=int,
                   help="neighborhood size (graph-based methods)")
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("agree", help="score agreement between two datasets")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--z", help="third dataset for partial agreement")
    p.add_argument("--out", required=True)
    p.add_argument("--per-item", action="store_true", dest="per_item")
    p.set_defaults(func=_cmd_agree)

    p = sub.add_parser("plot", help="render an SVG from stored results")
    p.add_argument("--type", required=True, choices=PLOT_TYPES)
    p.add_argument("--spec", required=True,
                   help="JSON file describing inputs and styling")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plot)

    p = sub.add_parser("pipeline", help="run a staged config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError, PipelineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
