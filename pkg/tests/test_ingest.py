import numpy as np
import pytest

from ph_connect.embedding import EmbeddingParams, sliding_window_embed
from ph_connect.errors import (
    InsufficientDataError, ParseError, SchemaError, ValidationError,
)
from ph_connect.ingest import (
    DEFAULT_NETWORK_SIZES, default_atlas, generate_synthetic_cohort,
    load_atlas, load_manifest, load_timeseries, save_atlas, save_manifest,
    save_timeseries, slice_network,
)
from ph_connect.rips import rips_diagrams


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadTimeseries:
    def test_basic_parse(self, tmp_path):
        p = write(tmp_path / "s1.csv", "a,b\n1,2\n3,4\n5,6\n")
        table = load_timeseries(p)
        assert table.n_timepoints == 3
        assert table.n_channels == 2
        assert table.channel_names == ("a", "b")
        assert table.subject_id == "s1"
        assert np.array_equal(table.samples, [[1, 2], [3, 4], [5, 6]])

    def test_malformed_cell_names_row_and_column(self, tmp_path):
        p = write(tmp_path / "bad.csv", "a,b\n1,2\n3,oops\n5,6\n")
        with pytest.raises(ParseError, match=r"row 3.*'b'"):
            load_timeseries(p)

    def test_nan_cell_rejected(self, tmp_path):
        p = write(tmp_path / "nan.csv", "a,b\n1,2\nnan,4\n5,6\n")
        with pytest.raises(ParseError, match="non-finite"):
            load_timeseries(p)

    def test_duplicate_header(self, tmp_path):
        p = write(tmp_path / "dup.csv", "a,a\n1,2\n3,4\n5,6\n")
        with pytest.raises(SchemaError, match="duplicate"):
            load_timeseries(p)

    def test_too_few_rows(self, tmp_path):
        p = write(tmp_path / "short.csv", "a,b\n1,2\n3,4\n")
        with pytest.raises(InsufficientDataError):
            load_timeseries(p)

    def test_ragged_row(self, tmp_path):
        p = write(tmp_path / "ragged.csv", "a,b\n1,2\n3\n5,6\n")
        with pytest.raises(SchemaError, match="row 3"):
            load_timeseries(p)

    def test_roundtrip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        p = tmp_path / "rt.csv"
        write(p, "x,y\n" + "\n".join(
            f"{float(a)!r},{float(b)!r}" for a, b in rng.normal(size=(5, 2))
        ) + "\n")
        t1 = load_timeseries(p)
        save_timeseries(t1, tmp_path / "rt2.csv")
        t2 = load_timeseries(tmp_path / "rt2.csv")
        assert np.array_equal(t1.samples, t2.samples)
        assert t1.channel_names == t2.channel_names


class TestAtlas:
    def test_default_counts_partition_160(self):
        atlas = default_atlas()
        counts = {net: len(chans) for net, chans in atlas.networks.items()}
        assert counts == DEFAULT_NETWORK_SIZES
        all_chans = atlas.all_channels()
        assert len(all_chans) == 160
        assert len(set(all_chans)) == 160

    def test_slices_of_160_column_table(self, tmp_path):
        atlas = default_atlas()
        rng = np.random.default_rng(1)
        header = ",".join(atlas.all_channels())
        rows = "\n".join(",".join(repr(float(v)) for v in row)
                         for row in rng.normal(size=(5, 160)))
        p = write(tmp_path / "full.csv", header + "\n" + rows + "\n")
        table = load_timeseries(p)
        for net, want in DEFAULT_NETWORK_SIZES.items():
            view = slice_network(table, atlas, net)
            assert view.n_channels == want

    def test_dmn_slice_has_34_columns_in_atlas_order(self, tmp_path):
        atlas = default_atlas()
        rng = np.random.default_rng(2)
        # shuffle columns so order restoration is actually exercised
        names = list(atlas.all_channels())
        rng.shuffle(names)
        rows = "\n".join(",".join(repr(float(v)) for v in row)
                         for row in rng.normal(size=(4, 160)))
        p = write(tmp_path / "f.csv", ",".join(names) + "\n" + rows + "\n")
        view = slice_network(load_timeseries(p), atlas, "DMN")
        assert view.channel_names == atlas.channels("DMN")
        assert view.n_channels == 34

    def test_unknown_network(self, tmp_path):
        p = write(tmp_path / "s.csv", "a,b\n1,2\n3,4\n5,6\n")
        with pytest.raises(ValidationError, match="XX"):
            slice_network(load_timeseries(p), default_atlas(), "XX")

    def test_atlas_json_roundtrip(self, tmp_path):
        atlas = default_atlas()
        save_atlas(atlas, tmp_path / "atlas.json")
        again = load_atlas(tmp_path / "atlas.json")
        assert again.networks == atlas.networks


class TestManifest:
    def test_roundtrip(self, tmp_path):
        labels = {"s1": "HC", "s2": "MCI"}
        save_manifest(labels, tmp_path / "m.csv")
        assert load_manifest(tmp_path / "m.csv") == labels

    def test_bad_header(self, tmp_path):
        write(tmp_path / "m.csv", "id,label\ns1,HC\n")
        with pytest.raises(SchemaError):
            load_manifest(tmp_path / "m.csv")


class TestSyntheticCohort:
    def test_deterministic(self):
        a = generate_synthetic_cohort(2, 40, seed=1)
        b = generate_synthetic_cohort(2, 40, seed=1)
        for s, t in zip(a.subjects, b.subjects):
            assert s.subject_id == t.subject_id
            assert np.array_equal(s.samples, t.samples)

    def test_seed_changes_data(self):
        a = generate_synthetic_cohort(2, 40, seed=1)
        b = generate_synthetic_cohort(2, 40, seed=2)
        assert not np.array_equal(a.subjects[0].samples, b.subjects[0].samples)

    def test_zero_size_rejected(self):
        with pytest.raises(ValidationError):
            generate_synthetic_cohort(0, 40, seed=1)
        with pytest.raises(ValidationError):
            generate_synthetic_cohort(3, 10, seed=1)

    def test_group_structure(self):
        cohort = generate_synthetic_cohort(3, 40, seed=5)
        labels = [s.group_label for s in cohort.subjects]
        assert labels == ["loop"] * 3 + ["noise"] * 3
        assert len({s.subject_id for s in cohort.subjects}) == 6

    def test_loop_channel_has_dominant_h1_bar(self):
        # one subject per group through the Rips route; the sinusoid's
        # embedding closes a curve while noise only makes specks
        cohort = generate_synthetic_cohort(2, 48, seed=7)
        spans = {}
        for subj in (cohort.subjects[0], cohort.subjects[2]):
            cloud = sliding_window_embed(subj.samples[:, 0], EmbeddingParams(),
                                         channel="ch01")
            h1 = rips_diagrams(cloud, max_dim=1)[1]
            spans[subj.group_label] = max((d - b) for b, d in h1.pairs)
        assert spans["loop"] > 3 * spans["noise"]

    def test_cluster_shift_plants_correlated_block(self):
        from ph_connect.graphs import pearson_correlation_matrix
        from ph_connect.ingest import SYNTH_BLOCK_SIZE

        cohort = generate_synthetic_cohort(4, 200, seed=3, recipe="cluster_shift")
        k = SYNTH_BLOCK_SIZE
        means = {"shift": [], "base": []}
        for subj in cohort.subjects:
            corr = pearson_correlation_matrix(subj)
            block = corr[:k, :k][np.triu_indices(k, 1)]
            means[subj.group_label].append(block.mean())
        assert np.mean(means["shift"]) > np.mean(means["base"]) + 0.2
