"""Pipeline: strict config parsing, staged execution, determinism, caching."""

import hashlib
import json

import numpy as np
import pytest

from drqa.pipeline import (
    ManifestEntry,
    PipelineError,
    ScoreRow,
    ScoreTable,
    load_config,
    parse_config,
    run_pipeline,
)


def run(obj, base_dir):
    return run_pipeline(parse_config(obj, base_dir=base_dir))


def tree_hashes(root):
    out = {}
    for p in sorted(root.rglob("*")):
        if p.is_file() and ".cache" not in p.parts:
            rel = p.relative_to(root).as_posix()
            out[rel] = hashlib.sha256(p.read_bytes()).hexdigest()
    return out


def full_config(out_dir, seed=11, cache=False):
    return {
        "version": 1,
        "seed": seed,
        "out_dir": out_dir,
        "cache": cache,
        "scores": "scores.csv",
        "stages": [
            {"kind": "generate", "name": "data",
             "shape": "sphere_regular", "n": 60},
            {"kind": "reduce", "name": "emb", "source": "data",
             "methods": ["pca", "smacof"], "target_dim": 2},
            {"kind": "agree", "name": "agr", "a": "data",
             "b": ["emb_pca", "emb_smacof"], "per_item": True,
             "range_k": [1, 20]},
            {"kind": "plot", "name": "lift", "type": "lift",
             "profiles": ["agr:emb_pca", "agr:emb_smacof"]},
            {"kind": "plot", "name": "scat", "type": "scatter",
             "embeddings": ["emb_pca"],
             "values": {"agree": "agr:emb_pca", "k": 5}},
            {"kind": "plot", "name": "heat", "type": "heatmap",
             "values": {"agree": "agr:emb_smacof"}, "order_by": "emb_smacof"},
            {"kind": "plot", "name": "lo", "type": "loess",
             "embeddings": ["emb_smacof"],
             "values": {"agree": "agr:emb_smacof"},
             "spec": {"style": {"grid_resolution": 10}}},
        ],
    }


class TestParsing:
    def test_zero_stages_runs_to_empty_manifest(self, tmp_path):
        entries = run({"version": 1, "stages": [], "out_dir": "o"}, tmp_path)
        assert entries == []
        payload = json.loads((tmp_path / "o" / "manifest.json").read_text())
        assert payload["outputs"] == []

    def test_version_required(self, tmp_path):
        with pytest.raises(ValueError, match="version"):
            parse_config({"stages": []}, tmp_path)
        with pytest.raises(ValueError, match="unsupported version"):
            parse_config({"version": 2, "stages": []}, tmp_path)

    def test_unknown_keys_rejected_everywhere(self, tmp_path):
        with pytest.raises(ValueError, match="unknown keys \\['stagez'\\]"):
            parse_config({"version": 1, "stagez": []}, tmp_path)
        base = {"version": 1, "stages": [
            {"kind": "generate", "name": "d", "shape": "torus_random",
             "n": 30, "extra": 1}]}
        with pytest.raises(ValueError, match="unknown keys \\['extra'\\]"):
            parse_config(base, tmp_path)
        cfg = {"version": 1, "stages": [
            {"kind": "generate", "name": "d", "shape": "torus_random", "n": 30},
            {"kind": "reduce", "name": "r", "source": "d",
             "method": "pca", "target_dim": 2,
             "params": {"bogus_knob": 3}}]}
        with pytest.raises(ValueError, match="bogus_knob"):
            parse_config(cfg, tmp_path)
        cfg = {"version": 1, "stages": [
            {"kind": "generate", "name": "d", "shape": "torus_random", "n": 30},
            {"kind": "reduce", "name": "r", "source": "d",
             "method": "pca", "target_dim": 2},
            {"kind": "agree", "name": "a", "a": "d", "b": "r",
             "per_item": True},
            {"kind": "plot", "name": "p", "type": "scatter",
             "embeddings": ["r"], "values": {"agree": "a"},
             "spec": {"styl": {}}}]}
        with pytest.raises(ValueError, match="unknown keys \\['styl'\\]"):
            parse_config(cfg, tmp_path)

    def test_method_params_checked_per_method(self, tmp_path):
        cfg = {"version": 1, "stages": [
            {"kind": "generate", "name": "d", "shape": "sphere_random", "n": 30},
            {"kind": "reduce", "name": "r", "source": "d",
             "method": "smacof", "target_dim": 2,
             "params": {"transform": "ordinal"}}]}
        parse_config(cfg, tmp_path)  # accepted for smacof
        cfg["stages"][1]["method"] = "pca"
        with pytest.raises(ValueError, match="transform"):
            parse_config(cfg, tmp_path)

    def test_references_must_resolve(self, tmp_path):
        with pytest.raises(ValueError, match="unknown source"):
            parse_config({"version": 1, "stages": [
                {"kind": "reduce", "name": "r", "source": "ghost",
                 "method": "pca", "target_dim": 2}]}, tmp_path)
        cfg = {"version": 1, "stages": [
            {"kind": "generate", "name": "d", "shape": "sphere_random", "n": 30},
            {"kind": "agree", "name": "a", "a": "d", "b": "ghost"}]}
        with pytest.raises(ValueError, match="unknown artifact 'ghost'"):
            parse_config(cfg, tmp_path)
        cfg = {"version": 1, "stages": [
            {"kind": "generate", "name": "d", "shape": "sphere_random", "n": 30},
            {"kind": "agree", "name": "a", "a": "d", "b": "d"},
            {"kind": "plot", "name": "p", "type": "lift",
             "profiles": ["nope"]}]}
        with pytest.raises(ValueError, match="unknown profile"):
            parse_config(cfg, tmp_path)

    def test_plot_values_need_per_item_output(self, tmp_path):
        cfg = {"version": 1, "stages": [
            {"kind": "generate", "name": "d", "shape": "sphere_random", "n": 30},
            {"kind": "agree", "name": "a", "a": "d", "b": "d"},
            {"kind": "plot", "name": "p", "type": "heatmap",
             "values": {"agree": "a"}}]}
        with pytest.raises(ValueError, match="per-item"):
            parse_config(cfg, tmp_path)

    def test_duplicate_names_rejected(self, tmp_path):
        cfg = {"version": 1, "stages": [
            {"kind": "generate", "name": "d", "shape": "sphere_random", "n": 30},
            {"kind": "generate", "name": "d", "shape": "sphere_random", "n": 30}]}
        with pytest.raises(ValueError, match="already in use"):
            parse_config(cfg, tmp_path)


class TestExecution:
    def test_stage_expansion_count(self, tmp_path):
        cfg = {"version": 1, "seed": 3, "out_dir": "o", "stages": [
            {"kind": "generate", "name": "data",
             "shape": "sphere_regular", "n": 50},
            {"kind": "reduce", "name": "emb", "source": "data",
             "methods": ["pca", "smacof"], "target_dim": 2},
            {"kind": "agree", "name": "agr", "a": "data", "b": "emb_smacof"},
            {"kind": "plot", "name": "fig", "type": "lift",
             "profiles": ["agr"]}]}
        entries = run(cfg, tmp_path)
        paths = [e.path for e in entries]
        assert paths == ["data.csv", "emb_pca.csv", "emb_smacof.csv",
                         "agr.csv", "fig.svg"]
        for e in entries:
            f = tmp_path / "o" / e.path
            assert f.exists() and f.stat().st_size > 0

    def test_param_grid_expansion(self, tmp_path):
        cfg = {"version": 1, "out_dir": "o", "stages": [
            {"kind": "generate", "name": "d", "shape": "sphere_random", "n": 40},
            {"kind": "reduce", "name": "r", "source": "d", "method": "lle",
             "target_dim": 2,
             "param_grid": [{"n_neighbors": 5}, {"n_neighbors": 9}]}]}
        entries = run(cfg, tmp_path)
        assert [e.path for e in entries] == ["d.csv", "r_p0.csv", "r_p1.csv"]
        a = np.loadtxt(tmp_path / "o" / "r_p0.csv", skiprows=1,
                       delimiter=",", usecols=(1, 2))
        b = np.loadtxt(tmp_path / "o" / "r_p1.csv", skiprows=1,
                       delimiter=",", usecols=(1, 2))
        assert not np.allclose(a, b)

    def test_seeds_derive_from_stage_index(self, tmp_path):
        cfg = {"version": 1, "seed": 100, "out_dir": "o", "stages": [
            {"kind": "generate", "name": "d", "shape": "torus_random", "n": 30},
            {"kind": "reduce", "name": "r", "source": "d",
             "method": "smacof", "target_dim": 2,
             "params": {"init": "random"}},
            {"kind": "agree", "name": "a", "a": "d", "b": "r"}]}
        entries = run(cfg, tmp_path)
        by_stage = {e.stage: e for e in entries}
        assert by_stage["d"].seed == 100
        assert by_stage["r"].seed == 101
        assert by_stage["a"].seed is None

    def test_ingest_with_imputation(self, tmp_path):
        src = tmp_path / "raw.csv"
        src.write_text("id,x,y\nu,1,2\nv,NA,4\nw,5,6\n")
        cfg = {"version": 1, "out_dir": "o", "imputation": "column_mean",
               "stages": [
                   {"kind": "ingest", "name": "d", "path": "raw.csv"},
                   {"kind": "agree", "name": "a", "a": "d", "b": "d"}]}
        run(cfg, tmp_path)
        text = (tmp_path / "o" / "d.csv").read_text()
        assert "3.0" in text  # imputed column mean of (1, 5)
        scores = (tmp_path / "o" / "a.csv").read_text()
        assert scores.startswith("k,agreement")

    def test_partial_agreement_output(self, tmp_path):
        cfg = {"version": 1, "out_dir": "o", "stages": [
            {"kind": "generate", "name": "d", "shape": "sphere_random", "n": 30},
            {"kind": "reduce", "name": "r", "source": "d",
             "method": "pca", "target_dim": 2},
            {"kind": "reduce", "name": "z", "source": "d",
             "method": "lle", "target_dim": 2, "params": {"n_neighbors": 6}},
            {"kind": "agree", "name": "a", "a": "d", "b": "r", "z": "z"}]}
        run(cfg, tmp_path)
        rows = (tmp_path / "o" / "a_partial.csv").read_text().splitlines()
        assert rows[0] == "psi_ab,psi_az,psi_bz,partial_agreement"
        vals = [float(v) for v in rows[1].split(",")]
        assert -1.0 <= vals[3] <= 1.0

    def test_failing_stage_removes_its_outputs(self, tmp_path):
        cfg = {"version": 1, "out_dir": "o", "stages": [
            {"kind": "generate", "name": "g1", "shape": "sphere_random",
             "n": 20},
            {"kind": "generate", "name": "g2", "shape": "sphere_random",
             "n": 24},
            {"kind": "reduce", "name": "r1", "source": "g1",
             "method": "pca", "target_dim": 2},
            {"kind": "agree", "name": "agr", "a": "g1", "b": ["r1", "g2"]}]}
        with pytest.raises(PipelineError, match="stage 'agr'"):
            run(cfg, tmp_path)
        out = tmp_path / "o"
        assert (out / "g1.csv").exists()
        assert (out / "r1.csv").exists()
        assert not (out / "agr_r1.csv").exists()
        assert not (out / "manifest.json").exists()

    def test_threads_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DRQA_THREADS", "2")
        cfg = full_config("o")
        run(cfg, tmp_path)
        assert (tmp_path / "o" / "scores.csv").exists()
        monkeypatch.setenv("DRQA_THREADS", "soon")
        with pytest.raises(ValueError, match="DRQA_THREADS"):
            run(full_config("p"), tmp_path)


class TestDeterminismAndCache:
    def test_reruns_are_byte_identical(self, tmp_path):
        run(full_config("r1"), tmp_path)
        run(full_config("r2"), tmp_path)
        h1 = tree_hashes(tmp_path / "r1")
        h2 = tree_hashes(tmp_path / "r2")
        assert h1 == h2
        assert "manifest.json" in h1 and "scores.csv" in h1

    def test_cache_matches_uncached(self, tmp_path):
        run(full_config("cold", cache=False), tmp_path)
        run(full_config("warm", cache=True), tmp_path)
        run(full_config("warm2", cache=True), tmp_path)
        cold = tree_hashes(tmp_path / "cold")
        warm = tree_hashes(tmp_path / "warm")
        assert cold == warm
        assert list((tmp_path / "warm" / ".cache").glob("ranks_*.npz"))
        # a second cached run reads the structures back
        again = dict(tree_hashes(tmp_path / "warm2"))
        assert again == cold

    def test_different_seed_changes_outputs(self, tmp_path):
        run(full_config("a", seed=1), tmp_path)
        run(full_config("b", seed=2), tmp_path)
        ha = tree_hashes(tmp_path / "a")
        hb = tree_hashes(tmp_path / "b")
        assert ha != hb


class TestScores:
    def test_score_table_contents(self, tmp_path):
        run(full_config("o"), tmp_path)
        lines = (tmp_path / "o" / "scores.csv").read_text().splitlines()
        assert lines[0] == ("technique,params,k_range,mean_agreement,"
                            "psi,psi_weighted")
        assert len(lines) == 3
        first = lines[1].split(",", 1)
        assert first[0] == "pca"
        assert '""dataset"":""data""' in first[1] or '"dataset"' in first[1]
        assert all(ln.split(",")[-4].endswith("1-20") for ln in lines[1:])

    def test_duplicate_rows_rejected(self):
        row = ScoreRow("pca", {"dataset": "d"}, "1-9", 0.5, 0.4, 0.3)
        with pytest.raises(ValueError, match="duplicate"):
            ScoreTable((row, row))

    def test_load_config_resolves_relative_paths(self, tmp_path):
        (tmp_path / "raw.csv").write_text("x,y\n1,2\n3,4\n5,6\n")
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({
            "version": 1, "out_dir": "res", "stages": [
                {"kind": "ingest", "name": "d", "path": "raw.csv"}]}))
        entries = run_pipeline(load_config(cfg_path))
        assert entries == [ManifestEntry("d.csv", "d", None)]
        assert (tmp_path / "res" / "d.csv").exists()
