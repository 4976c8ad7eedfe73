"""Figure rendering: schemas, error handling, and byte determinism."""

import pathlib

import pytest

from figure_plots.plot import (
    PlotError,
    PlotSpec,
    main,
    plot_heatmap,
    plot_ratio_lines,
    plot_slope,
    read_rows,
)

DATA = pathlib.Path(__file__).parent / "data"


def spec(kind, csv_name, out):
    return PlotSpec(input_csv=str(DATA / csv_name), kind=kind,
                    output=str(out))


class TestReadRows:
    def test_generic_schema(self):
        rows = read_rows(str(DATA / "golden_spectral_generic.csv"))
        assert {r.stat for r in rows} == {
            "inv_spectral_norm", "ratio", "log2_ratio"
        }

    def test_wide_schema(self):
        rows = read_rows(str(DATA / "golden_spectral_wide.csv"))
        assert len(rows) == 8 * 3  # 2 H x 4 n, three stats each
        assert all(r.n in (16, 32, 64, 128) for r in rows)

    def test_empty_csv_rejected(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("experiment,H,epsilon,alpha,delta,n,M,stat,value,se,"
                     "seed_base\n")
        with pytest.raises(PlotError):
            read_rows(str(p))

    def test_unknown_header_rejected(self, tmp_path):
        p = tmp_path / "odd.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(PlotError):
            read_rows(str(p))

    def test_unknown_stat_skipped_with_warning(self, tmp_path):
        p = tmp_path / "mix.csv"
        p.write_text(
            "experiment,H,epsilon,alpha,delta,n,M,stat,value,se,seed_base\n"
            "x,0.7,,,,,2,l2_error,1.0,0.1,0\n"
            "x,0.7,,,,,2,mystery,9.9,0.1,0\n"
        )
        with pytest.warns(UserWarning):
            rows = read_rows(str(p))
        assert len(rows) == 1


class TestRatioLines:
    def test_renders_from_both_schemas(self, tmp_path):
        for name in ("golden_spectral_generic.csv",
                     "golden_spectral_wide.csv"):
            out = tmp_path / name.replace(".csv", ".png")
            plot_ratio_lines(spec("ratio_lines", name, out))
            assert out.stat().st_size > 0

    def test_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        plot_ratio_lines(spec("ratio_lines", "golden_spectral_wide.csv", a))
        plot_ratio_lines(spec("ratio_lines", "golden_spectral_wide.csv", b))
        assert a.read_bytes() == b.read_bytes()

    def test_wrong_experiment_rejected(self, tmp_path):
        with pytest.raises(PlotError):
            plot_ratio_lines(
                spec("ratio_lines", "golden_heatmap.csv", tmp_path / "x.png")
            )


class TestHeatmap:
    def test_renders(self, tmp_path):
        out = tmp_path / "hm.png"
        plot_heatmap(spec("heatmap", "golden_heatmap.csv", out))
        assert out.stat().st_size > 0

    def test_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        plot_heatmap(spec("heatmap", "golden_heatmap.csv", a))
        plot_heatmap(spec("heatmap", "golden_heatmap.csv", b))
        assert a.read_bytes() == b.read_bytes()

    def test_two_by_two_synthetic(self, tmp_path):
        p = tmp_path / "small.csv"
        header = "experiment,H,epsilon,alpha,delta,n,M,stat,value,se,seed_base"
        rows = [
            "l2_heatmap,0.7,0.2,0.3,,,5,l2_error,0.5,0.1,0",
            "l2_heatmap,0.7,0.2,0.5,,,5,l2_error,0.4,0.1,0",
            "l2_heatmap,0.7,0.1,0.3,,,5,l2_error,0.3,0.1,0",
            "l2_heatmap,0.7,0.1,0.5,,,5,l2_error,0.2,0.1,0",
        ]
        p.write_text("\n".join([header] + rows) + "\n")
        out = tmp_path / "small.png"
        plot_heatmap(PlotSpec(str(p), "heatmap", str(out)))
        assert out.stat().st_size > 0

    def test_missing_cell_tolerated(self, tmp_path):
        p = tmp_path / "gap.csv"
        header = "experiment,H,epsilon,alpha,delta,n,M,stat,value,se,seed_base"
        rows = [
            "l2_heatmap,0.7,0.2,0.3,,,5,l2_error,0.5,0.1,0",
            "l2_heatmap,0.7,0.1,0.5,,,5,l2_error,0.2,0.1,0",
        ]
        p.write_text("\n".join([header] + rows) + "\n")
        out = tmp_path / "gap.png"
        plot_heatmap(PlotSpec(str(p), "heatmap", str(out)))
        assert out.stat().st_size > 0

    def test_multiple_h_rejected(self, tmp_path):
        p = tmp_path / "multi.csv"
        header = "experiment,H,epsilon,alpha,delta,n,M,stat,value,se,seed_base"
        rows = [
            "l2_heatmap,0.7,0.2,0.3,,,5,l2_error,0.5,0.1,0",
            "l2_heatmap,0.8,0.2,0.3,,,5,l2_error,0.5,0.1,0",
        ]
        p.write_text("\n".join([header] + rows) + "\n")
        with pytest.raises(PlotError):
            plot_heatmap(PlotSpec(str(p), "heatmap", str(tmp_path / "m.png")))


class TestSlope:
    def test_renders_with_fitted_rates(self, tmp_path):
        out = tmp_path / "sl.png"
        plot_slope(spec("slope", "golden_homogenization.csv", out))
        assert out.stat().st_size > 0

    def test_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        plot_slope(spec("slope", "golden_homogenization.csv", a))
        plot_slope(spec("slope", "golden_homogenization.csv", b))
        assert a.read_bytes() == b.read_bytes()


class TestCli:
    def test_success(self, tmp_path):
        out = tmp_path / "cli.png"
        rc = main(["--kind", "heatmap",
                   "--in", str(DATA / "golden_heatmap.csv"),
                   "--out", str(out)])
        assert rc == 0
        assert out.stat().st_size > 0

    def test_empty_input_exits_nonzero(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("experiment,H,epsilon,alpha,delta,n,M,stat,value,se,"
                     "seed_base\n")
        rc = main(["--kind", "heatmap", "--in", str(p),
                   "--out", str(tmp_path / "x.png")])
        assert rc == 1

    def test_title_override(self, tmp_path):
        out = tmp_path / "titled.png"
        rc = main(["--kind", "slope",
                   "--in", str(DATA / "golden_homogenization.csv"),
                   "--out", str(out), "--title", "Rates"])
        assert rc == 0
