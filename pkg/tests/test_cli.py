import json
import math
import os
import subprocess
import sys
from pathlib import Path

from bubblelab import GrowthModel, iterate, write_csv
from bubblelab.cli import main

GOLDEN_TABLE2 = Path(__file__).parent / "data" / "table2_golden.csv"


def run_cli(*argv):
    return main(list(argv))


def _feedback_prices_csv(path, steps=23):
    excess = iterate(GrowthModel.price_feedback(math.log(1.09), 1e-4, 60.0), steps)
    prices = tuple(v + 60.0 for v in excess.values)
    from bubblelab import PriceSeries

    write_csv(path, PriceSeries(0, prices))
    return path


def _anchored_exponential_csv(path, steps=20):
    # constant-rate bubble anchored at the fundamental: excess is geometric
    excess = iterate(GrowthModel.exponential(math.log(1.1), 60.0), steps)
    from bubblelab import PriceSeries

    write_csv(path, PriceSeries(0, tuple(v + 60.0 for v in excess.values)))
    return path


def _geometric_prices_csv(path, steps=20):
    # prices themselves grow at a constant rate: returns sit on the diagonal;
    # written at full precision since cent-rounding breaks exact geometry
    from bubblelab import PriceSeries

    series = PriceSeries(0, tuple(60.0 * 1.1**t for t in range(steps + 1)))
    write_csv(path, series, decimals=12)
    return path


class TestSimulate:
    def test_fundamentalists_hold_sixty(self, tmp_path):
        code = run_cli(
            "simulate", "--agents", "fundamentalist", "--horizon", "50",
            "--outdir", str(tmp_path),
        )
        assert code == 0
        lines = (tmp_path / "simulation.csv").read_text().strip().split("\n")
        assert len(lines) == 51  # header + 50 periods
        for i, line in enumerate(lines[1:]):
            fields = line.split(",")
            assert fields[0] == str(i)
            assert fields[1] == "60.00"
        meta = json.loads((tmp_path / "simulation.json").read_text())
        assert meta["metadata"]["horizon"] == 50

    def test_bubble_preset_deterministic(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        for out in (a, b):
            code = run_cli("simulate", "--seed", "42", "--noise-sigma", "0.01",
                           "--horizon", "30", "--outdir", str(out))
            assert code == 0
        assert (a / "simulation.csv").read_bytes() == (b / "simulation.csv").read_bytes()
        assert (a / "simulation.json").read_bytes() == (b / "simulation.json").read_bytes()

    def test_bubble_preset_grows(self, tmp_path):
        run_cli("simulate", "--horizon", "30", "--outdir", str(tmp_path))
        lines = (tmp_path / "simulation.csv").read_text().strip().split("\n")[1:]
        prices = [float(ln.split(",")[1]) for ln in lines]
        assert prices[-1] > 100.0  # pulled well above the fundamental

    def test_zero_horizon_is_config_error(self, tmp_path):
        code = run_cli("simulate", "--horizon", "0", "--outdir", str(tmp_path))
        assert code == 2

    def test_bad_params_is_config_error(self, tmp_path):
        code = run_cli("simulate", "--params", "r=0", "--outdir", str(tmp_path))
        assert code == 2
        code = run_cli("simulate", "--params", "bogus=1", "--outdir", str(tmp_path))
        assert code == 2


class TestSweepCommand:
    def test_feedback_series_all_cells_positive_b(self, tmp_path):
        inp = _feedback_prices_csv(tmp_path / "prices.csv")
        code = run_cli("sweep", "--input", str(inp), "--outdir", str(tmp_path))
        assert code == 0
        lines = (tmp_path / "price_grid.csv").read_text().strip().split("\n")[1:]
        assert lines
        for ln in lines:
            fields = ln.split(",")
            assert fields[11] == "true"
            assert float(fields[4]) > 0.0  # b column
        summary = json.loads((tmp_path / "sweep_summary.json").read_text())
        assert summary["price"]["significant_fraction"] == 1.0
        assert (tmp_path / "return_grid.csv").exists()

    def test_constant_series_notes_non_positive_excess(self, tmp_path):
        from bubblelab import PriceSeries

        inp = tmp_path / "flat.csv"
        write_csv(inp, PriceSeries(0, tuple([60.0] * 20)))
        code = run_cli("sweep", "--input", str(inp), "--outdir", str(tmp_path))
        assert code == 0
        summary = json.loads((tmp_path / "sweep_summary.json").read_text())
        assert summary["price"]["valid_cells"] == 0
        assert summary["price"]["significant_fraction"] is None
        assert "NonPositiveExcess" in summary["price"]["invalid_by_error"]

    def test_missing_input_is_ingest_error(self, tmp_path, capsys):
        code = run_cli("sweep", "--input", str(tmp_path / "nope.csv"),
                       "--outdir", str(tmp_path))
        assert code == 3
        assert "error" in capsys.readouterr().err

    def test_malformed_input_reports_line(self, tmp_path, capsys):
        inp = tmp_path / "bad.csv"
        inp.write_text("t,price\n0,60.0\n1,abc\n")
        code = run_cli("sweep", "--input", str(inp), "--outdir", str(tmp_path))
        assert code == 3
        assert "line 3" in capsys.readouterr().err

    def test_one_sided_confidence_tightens_lower_bounds(self, tmp_path):
        from bubblelab import PriceSeries, iterate_noisy

        excess = iterate_noisy(
            GrowthModel.price_feedback(math.log(1.09), 1e-4, 60.0), 20, 0.01, seed=1
        )
        inp = tmp_path / "prices.csv"
        write_csv(inp, PriceSeries(0, tuple(v + 60.0 for v in excess.values)))
        two = tmp_path / "two"
        one = tmp_path / "one"
        assert run_cli("sweep", "--input", str(inp), "--outdir", str(two)) == 0
        assert run_cli("sweep", "--input", str(inp), "--confidence", "one-sided",
                       "--outdir", str(one)) == 0

        def lower_bounds(path):
            rows = (path / "price_grid.csv").read_text().strip().split("\n")[1:]
            return {
                (r.split(",")[1], r.split(",")[2]): float(r.split(",")[8])
                for r in rows if r.split(",")[11] == "true"
            }

        two_lb, one_lb = lower_bounds(two), lower_bounds(one)
        assert two_lb.keys() == one_lb.keys()
        # the one-sided 95% bound sits closer to the estimate
        assert all(one_lb[k] >= two_lb[k] for k in two_lb)
        assert any(one_lb[k] > two_lb[k] for k in two_lb)

    def test_min_window_flag_shrinks_grid(self, tmp_path):
        inp = _feedback_prices_csv(tmp_path / "prices.csv")
        wide = tmp_path / "wide"
        narrow = tmp_path / "narrow"
        assert run_cli("sweep", "--input", str(inp), "--outdir", str(wide)) == 0
        assert run_cli("sweep", "--input", str(inp), "--min-window", "10",
                       "--outdir", str(narrow)) == 0
        n_wide = len((wide / "price_grid.csv").read_text().strip().split("\n")) - 1
        n_narrow = len((narrow / "price_grid.csv").read_text().strip().split("\n")) - 1
        assert n_narrow < n_wide


class TestClassifyCommand:
    def test_feedback_bubble_labelled_price(self, tmp_path, capsys):
        from bubblelab import PriceSeries, iterate_noisy

        excess = iterate_noisy(
            GrowthModel.price_feedback(math.log(1.09), 1.5e-4, 60.0), 20, 0.01, seed=3
        )
        inp = tmp_path / "prices.csv"
        write_csv(inp, PriceSeries(0, tuple(v + 60.0 for v in excess.values)))
        code = run_cli("classify", "--input", str(inp), "--outdir", str(tmp_path))
        assert code == 0
        out = capsys.readouterr().out
        assert "anchoring on price" in out
        verdict = json.loads((tmp_path / "verdict.json").read_text())
        assert verdict["label"] == "anchoring_on_price"

    def test_pure_exponential_labelled_rational(self, tmp_path):
        inp = _anchored_exponential_csv(tmp_path / "prices.csv")
        code = run_cli("classify", "--input", str(inp), "--outdir", str(tmp_path))
        assert code == 0
        verdict = json.loads((tmp_path / "verdict.json").read_text())
        assert verdict["label"] == "rational_exponential"

    def test_flat_series_labelled_erratic(self, tmp_path):
        from bubblelab import PriceSeries

        inp = tmp_path / "flat.csv"
        write_csv(inp, PriceSeries(0, tuple([60.0] * 25)))
        code = run_cli("classify", "--input", str(inp), "--outdir", str(tmp_path))
        assert code == 0
        verdict = json.loads((tmp_path / "verdict.json").read_text())
        assert verdict["label"] == "erratic"

    def test_explicit_window(self, tmp_path):
        inp = _feedback_prices_csv(tmp_path / "prices.csv")
        code = run_cli("classify", "--input", str(inp), "--window", "5,20",
                       "--outdir", str(tmp_path))
        assert code == 0
        verdict = json.loads((tmp_path / "verdict.json").read_text())
        assert verdict["bubble_window"] == [5, 20]

    def test_bad_window_is_config_error(self, tmp_path):
        inp = _feedback_prices_csv(tmp_path / "prices.csv")
        assert run_cli("classify", "--input", str(inp), "--window", "7",
                       "--outdir", str(tmp_path)) == 2
        assert run_cli("classify", "--input", str(inp), "--window", "7,9",
                       "--outdir", str(tmp_path)) == 2
        assert run_cli("classify", "--input", str(inp), "--window", "7,99",
                       "--outdir", str(tmp_path)) == 2


class TestTable2Command:
    def test_default_matches_golden_file(self, tmp_path):
        code = run_cli("table2", "--outdir", str(tmp_path))
        assert code == 0
        assert (tmp_path / "table2.csv").read_bytes() == GOLDEN_TABLE2.read_bytes()

    def test_truncated_steps(self, tmp_path):
        code = run_cli("table2", "--steps", "5", "--outdir", str(tmp_path))
        assert code == 0
        lines = (tmp_path / "table2.csv").read_text().strip().split("\n")
        assert len(lines) == 7  # header + rows t=0..5
        golden = GOLDEN_TABLE2.read_text().strip().split("\n")
        assert lines == golden[:7]

    def test_zero_feedback_columns_identical(self, tmp_path):
        a1 = str(math.log(1.1))
        code = run_cli("table2", "--a1", a1, "--a2", a1, "--b2", "0",
                       "--outdir", str(tmp_path))
        assert code == 0
        for line in (tmp_path / "table2.csv").read_text().strip().split("\n")[1:]:
            _, e, pe, f, pf = line.split(",")
            assert e == f and pe == pf

    def test_runtime_under_a_second(self, tmp_path):
        import time

        start = time.perf_counter()
        assert run_cli("table2", "--outdir", str(tmp_path)) == 0
        assert time.perf_counter() - start < 1.0


class TestPlotdataCommand:
    def test_exponential_scatter_sits_on_diagonal(self, tmp_path):
        inp = _geometric_prices_csv(tmp_path / "prices.csv")
        code = run_cli("plotdata", "--input", str(inp), "--outdir", str(tmp_path))
        assert code == 0
        lines = (tmp_path / "plot_returns.csv").read_text().strip().split("\n")
        assert lines[0] == "t,return_current,return_next,diagonal"
        for ln in lines[1:]:
            _, cur, nxt, diag = ln.split(",")
            assert abs(float(nxt) - float(cur)) < 1e-12
            assert float(diag) == float(cur)

    def test_feedback_scatter_sits_above_diagonal(self, tmp_path):
        inp = _feedback_prices_csv(tmp_path / "prices.csv")
        code = run_cli("plotdata", "--input", str(inp), "--outdir", str(tmp_path))
        assert code == 0
        lines = (tmp_path / "plot_returns.csv").read_text().strip().split("\n")[1:]
        for ln in lines:
            _, cur, nxt, _ = ln.split(",")
            assert float(nxt) > float(cur)

    def test_forecast_columns_pass_through(self, tmp_path, capsys):
        sim = tmp_path / "sim"
        run_cli("simulate", "--horizon", "20", "--outdir", str(sim))
        code = run_cli("plotdata", "--input", str(sim / "simulation.csv"),
                       "--outdir", str(tmp_path))
        assert code == 0
        header = (tmp_path / "plot_forecasts.csv").read_text().split("\n")[0]
        assert header == "t,h1,h2,h3,h4,h5,h6"

    def test_zero_price_is_compute_error(self, tmp_path, capsys):
        from bubblelab import PriceSeries

        inp = tmp_path / "zeros.csv"
        write_csv(inp, PriceSeries(0, (60.0, 0.0, 66.0, 70.0, 80.0)))
        code = run_cli("plotdata", "--input", str(inp), "--outdir", str(tmp_path))
        assert code == 4
        assert "non-positive" in capsys.readouterr().err

    def test_without_forecasts_skips_file_with_notice(self, tmp_path, capsys):
        inp = _geometric_prices_csv(tmp_path / "prices.csv")
        code = run_cli("plotdata", "--input", str(inp), "--outdir", str(tmp_path))
        assert code == 0
        assert not (tmp_path / "plot_forecasts.csv").exists()
        assert "skipped" in capsys.readouterr().out
        assert (tmp_path / "plot_prices.csv").exists()
        assert (tmp_path / "plot_price_grid.csv").exists()
        assert (tmp_path / "plot_return_grid.csv").exists()


class TestConfigAndEnvironment:
    def test_config_file_supplies_defaults(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("horizon = 7\nagents = fundamentalist\n")
        code = run_cli("simulate", "--config", str(cfg), "--outdir", str(tmp_path))
        assert code == 0
        lines = (tmp_path / "simulation.csv").read_text().strip().split("\n")
        assert len(lines) == 8

    def test_flags_override_config_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("horizon = 7\nagents = fundamentalist\n")
        code = run_cli("simulate", "--config", str(cfg), "--horizon", "3",
                       "--outdir", str(tmp_path))
        assert code == 0
        lines = (tmp_path / "simulation.csv").read_text().strip().split("\n")
        assert len(lines) == 4

    def test_unknown_config_key_is_config_error(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("frobnicate = 1\n")
        assert run_cli("simulate", "--config", str(cfg),
                       "--outdir", str(tmp_path)) == 2

    def test_outdir_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv("BUBBLELAB_OUTDIR", str(tmp_path / "envout"))
        assert run_cli("table2") == 0
        assert (tmp_path / "envout" / "table2.csv").exists()

    def test_unknown_flag_exits_two(self, capsys):
        assert run_cli("simulate", "--frobnicate") == 2
        capsys.readouterr()

    def test_console_script_installed(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "bubblelab.cli", "table2", "--steps", "2"],
            cwd=tmp_path, capture_output=True, text=True,
            env={**os.environ, "BUBBLELAB_OUTDIR": str(tmp_path)},
        )
        assert proc.returncode == 0
        assert (tmp_path / "table2.csv").exists()


class TestPipelineClosure:
    def test_simulate_sweep_classify_end_to_end(self, tmp_path):
        one = tmp_path / "one"
        two = tmp_path / "two"
        for root in (one, two):
            sim = root / "sim"
            assert run_cli("simulate", "--seed", "7", "--noise-sigma", "0.005",
                           "--horizon", "25", "--outdir", str(sim)) == 0
            assert run_cli("sweep", "--input", str(sim / "simulation.csv"),
                           "--outdir", str(root / "sweep")) == 0
            assert run_cli("classify", "--input", str(sim / "simulation.csv"),
                           "--outdir", str(root / "cls")) == 0
            assert run_cli("plotdata", "--input", str(sim / "simulation.csv"),
                           "--outdir", str(root / "plot")) == 0
        for rel in (
            "sim/simulation.csv", "sim/simulation.json",
            "sweep/price_grid.csv", "sweep/return_grid.csv",
            "cls/verdict.json", "plot/plot_returns.csv", "plot/plot_forecasts.csv",
        ):
            assert (one / rel).read_bytes() == (two / rel).read_bytes()
        # the sweep summary embeds the input path; everything else must agree
        summaries = []
        for root in (one, two):
            payload = json.loads((root / "sweep" / "sweep_summary.json").read_text())
            payload.pop("input")
            summaries.append(payload)
        assert summaries[0] == summaries[1]
