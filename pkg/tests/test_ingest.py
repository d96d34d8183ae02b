"""CSV ingestion, imputation, and lossless round trips."""

import numpy as np
import pytest

from drqa.agreement import agreement_profile, classify_rank_movements
from drqa.geometry import Configuration, euclidean_distances, ranks_from_config
from drqa.ingest import (
    impute_column_mean,
    ingest_csv,
    read_per_item,
    read_profile,
    write_configuration,
    write_movements,
    write_per_item,
    write_profile,
)


class TestIngest:
    def test_plain_numeric_csv(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("1,2\n3,4\n5,6\n")
        c = ingest_csv(p, has_header=False)
        assert c.n == 3 and c.m == 2
        assert c.fully_observed
        assert (c.items == [[1, 2], [3, 4], [5, 6]]).all()
        assert c.labels is None

    def test_missing_token_and_empty_cells_masked(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b\n1,NA\n,4\n5,6\n")
        c = ingest_csv(p, missing_token="NA")
        assert not c.fully_observed
        assert c.mask.tolist() == [[True, False], [False, True], [True, True]]

    def test_header_id_column_becomes_labels(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("id,x,y\nalpha,1,2\nbeta,3,4\n")
        c = ingest_csv(p)
        assert c.labels == ("alpha", "beta")
        assert c.m == 2

    def test_numeric_ids_still_labels_under_id_header(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("id,x,y\n0,1,2\n1,3,4\n")
        c = ingest_csv(p)
        assert c.labels == ("0", "1")

    def test_headerless_text_column_becomes_labels(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("alpha,1,2\nbeta,3,4\n")
        c = ingest_csv(p, has_header=False)
        assert c.labels == ("alpha", "beta")

    def test_ragged_row_reports_row_number(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("1,2\n3\n5,6\n")
        with pytest.raises(ValueError, match="row 2 has 1 fields"):
            ingest_csv(p, has_header=False)

    def test_non_numeric_cell_reports_coordinates(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("x,y\n1,2\n3,oops\n")
        with pytest.raises(ValueError, match="'oops' at row 2, column 2"):
            ingest_csv(p)

    def test_empty_file_rejected(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("")
        with pytest.raises(ValueError, match="no rows"):
            ingest_csv(p)

    def test_quoted_labels_round_trip(self, tmp_path):
        c = Configuration(np.array([[1.0, 2.0], [3.0, 4.0]]),
                          labels=('a,"x"', "b"))
        p = tmp_path / "d.csv"
        write_configuration(c, p)
        back = ingest_csv(p)
        assert back.labels == ('a,"x"', "b")


class TestRoundTrip:
    def test_values_survive_exactly(self, tmp_path):
        rng = np.random.default_rng(0)
        items = rng.standard_normal((20, 4)) * 1e3
        mask = rng.uniform(size=(20, 4)) > 0.1
        mask[:, 0] = True  # keep every column alive
        c = Configuration(items, mask=mask)
        p = tmp_path / "d.csv"
        write_configuration(c, p)
        back = ingest_csv(p)
        assert (back.mask == mask).all() if back.mask is not None else mask.all()
        assert (np.where(mask, back.items, 0) == np.where(mask, items, 0)).all()

    def test_second_write_is_byte_identical(self, tmp_path):
        rng = np.random.default_rng(1)
        c = Configuration(rng.standard_normal((10, 3)))
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_configuration(c, p1)
        write_configuration(ingest_csv(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestImpute:
    def test_column_mean(self):
        items = np.array([[1.0, 5.0], [99.0, 6.0], [3.0, 7.0]])
        mask = np.array([[True, True], [False, True], [True, True]])
        c = impute_column_mean(Configuration(items, mask=mask))
        assert c.items[1, 0] == pytest.approx(2.0)
        assert c.fully_observed
        assert c.provenance[-1] == "imputed:column_mean"

    def test_fully_observed_unchanged(self):
        c = Configuration(np.ones((3, 2)) * np.arange(3)[:, None])
        assert impute_column_mean(c) is c

    def test_dead_column_rejected(self):
        items = np.zeros((3, 2))
        mask = np.array([[True, False], [True, False], [True, False]])
        with pytest.raises(ValueError, match="column 1 has no observed"):
            impute_column_mean(Configuration(items, mask=mask))

    def test_survey_like_file_yields_finite_distances(self, tmp_path):
        rng = np.random.default_rng(2)
        items = rng.normal(3.0, 1.0, (60, 8))
        mask = rng.uniform(size=items.shape) > 0.04
        mask[:, 0] = True
        c = Configuration(items, mask=mask)
        p = tmp_path / "survey.csv"
        write_configuration(c, p)
        filled = impute_column_mean(ingest_csv(p))
        d = euclidean_distances(filled)
        assert np.isfinite(d.values).all()


class TestProfileFiles:
    def make_profile(self):
        rng = np.random.default_rng(3)
        a = Configuration(rng.standard_normal((15, 3)))
        b = Configuration(rng.standard_normal((15, 2)))
        return agreement_profile(ranks_from_config(a), ranks_from_config(b))

    def test_round_trip(self, tmp_path):
        prof = self.make_profile()
        p = tmp_path / "prof.csv"
        write_profile(prof, p)
        back = read_profile(p)
        assert back.n == prof.n
        assert (back.ar == prof.ar).all()
        assert (back.ar_adjusted == prof.ar_adjusted).all()

    def test_wrong_file_rejected(self, tmp_path):
        p = tmp_path / "other.csv"
        p.write_text("id,x\n0,1\n")
        with pytest.raises(ValueError, match="not an agreement profile"):
            read_profile(p)

    def test_gap_in_k_rejected(self, tmp_path):
        p = tmp_path / "prof.csv"
        p.write_text("k,agreement,adjusted_agreement\n1,0.5,0.25\n3,1.0,0.0\n")
        with pytest.raises(ValueError, match="k = 1..n-1"):
            read_profile(p)


class TestPerItemFiles:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        vals = rng.uniform(0, 1, (6, 3))
        p = tmp_path / "items.csv"
        write_per_item([1, 5, 9], vals, p, labels=list("abcdef"))
        ks, back, labels = read_per_item(p)
        assert ks == (1, 5, 9)
        assert (back == vals).all()
        assert labels == tuple("abcdef")

    def test_malformed_k_header(self, tmp_path):
        p = tmp_path / "items.csv"
        p.write_text("id,k=1,q=2\n0,0.1,0.2\n")
        with pytest.raises(ValueError, match="malformed k columns"):
            read_per_item(p)

    def test_column_mismatch_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="one column per k"):
            write_per_item([1, 2], np.zeros((3, 3)), tmp_path / "x.csv")


class TestMovementFiles:
    def test_rows_written(self, tmp_path):
        rng = np.random.default_rng(5)
        ra = ranks_from_config(Configuration(rng.standard_normal((8, 3))))
        rb = ranks_from_config(Configuration(rng.standard_normal((8, 2))))
        tallies = [classify_rank_movements(ra, rb, k) for k in (1, 3, 5)]
        p = tmp_path / "moves.csv"
        write_movements(tallies, p)
        lines = p.read_text().splitlines()
        assert lines[0].startswith("k,hard_intrusions")
        assert len(lines) == 4
        total = sum(int(x) for x in lines[1].split(",")[1:])
        assert total == 8 * 7
