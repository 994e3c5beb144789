import numpy as np
import pytest
from scipy import stats

from nbrecon.ldpc import make_code, save
from nbrecon.sim import cli, engine
from nbrecon.sim.engine import (ExperimentSpec, SweepPoint, alpha_sweep, d_saturation_study, efficiency_at_fer,
                                fer_sweep, resolve_workers, snr_for_beta, wilson_interval)
from nbrecon.sim.figures import reproduce, waterfall_grid
from nbrecon.sim.records import emit_csv, parse_config, parse_snr_grid, read_csv, to_records

SMALL = dict(q=4, rate=0.5, n=200, alpha=6.0, d=2)


def test_wilson_matches_closed_form():
    for k, n in [(0, 10), (3, 40), (50, 100), (200, 200)]:
        z = stats.norm.ppf(0.975)
        p = k / n
        center = (p + z * z / (2 * n)) / (1 + z * z / n)
        half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / (1 + z * z / n)
        lo, hi = wilson_interval(k, n)
        assert lo == pytest.approx(max(0, center - half), abs=1e-12)
        assert hi == pytest.approx(min(1, center + half), abs=1e-12)
        assert lo <= p <= hi
    assert wilson_interval(0, 0) == (0.0, 1.0)


@pytest.mark.parametrize("p_true", [0.02, 0.1, 0.3, 0.5, 0.9])
def test_wilson_coverage_binomial_oracle(p_true):
    n = 200
    ks = np.arange(n + 1)
    covered = np.array([lo <= p_true <= hi for lo, hi in (wilson_interval(k, n) for k in ks)])
    coverage = stats.binom.pmf(ks, n, p_true)[covered].sum()
    assert 0.92 <= coverage <= 0.99


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(frames=0)
    with pytest.raises(ValueError):
        ExperimentSpec(snr_db=(3, 2))
    assert ExperimentSpec(frames=10, min_frames=50).min_frames == 10


def test_workers_env(monkeypatch):
    monkeypatch.setenv(engine.WORKERS_ENV, "3")
    assert resolve_workers() == 3
    assert resolve_workers(2) == 2
    monkeypatch.delenv(engine.WORKERS_ENV)
    assert resolve_workers() == 1


def test_certain_failure_and_success():
    spec = ExperimentSpec(**SMALL, snr_db=(-30.0, 37.0), frames=100, min_frames=100, max_errors=1000)
    low, high = fer_sweep(spec).points
    assert low.fer == 1.0 and low.frames == 100
    assert high.fer == 0.0 and high.frames == 100
    assert high.iters_mean <= 2
    for pt in (low, high):
        assert pt.ci_lo <= pt.fer <= pt.ci_hi


def test_stopping_rule():
    spec = ExperimentSpec(**SMALL, snr_db=(-5.0,), frames=500, min_frames=30, max_errors=10)
    pt = fer_sweep(spec).points[0]
    assert pt.frames == 30 and pt.errors == 30
    spec = spec.replace(min_frames=5, max_errors=10)
    pt = fer_sweep(spec).points[0]
    assert pt.frames == 10 and pt.errors == 10


def test_sweep_is_deterministic_and_monotone():
    spec = ExperimentSpec(**SMALL, snr_db=(4.0, 6.0, 8.0), frames=60, min_frames=60)
    a = to_records(fer_sweep(spec))
    assert a == to_records(fer_sweep(spec))
    fer = [r["fer"] for r in a]
    assert fer[0] >= fer[1] >= fer[2]


def test_pool_matches_serial():
    spec = ExperimentSpec(**SMALL, snr_db=(5.0, 6.0), frames=40, min_frames=10, max_errors=8)
    serial = to_records(fer_sweep(spec.replace(workers=1)))
    pooled = to_records(fer_sweep(spec.replace(workers=2)))
    assert serial == pooled


def test_snr_mismatch_hurts():
    code = make_code(4, 200, 0.5)
    spec = ExperimentSpec(**SMALL, snr_db=(6.0,), frames=80, min_frames=80)
    good = fer_sweep(spec, code).points[0]
    bad = fer_sweep(spec.replace(snr_mismatch_db=-6.0), code).points[0]
    assert bad.fer >= good.fer


def _synthetic_point(center, slope=3.0, frames=400):
    def point(self, snr_db, spec, decide_against=None):
        fer = 1 / (1 + np.exp(slope * (snr_db - center)))
        errors = int(round(fer * frames))
        lo, hi = wilson_interval(errors, frames)
        return SweepPoint(float(snr_db), 0.9, frames, errors, 0, errors / frames, lo, hi, 10.0, 0.9)
    return point


def test_bisection_on_synthetic_curve(monkeypatch):
    center = 7.3
    monkeypatch.setattr(engine.FrameRunner, "point", _synthetic_point(center))
    spec = ExperimentSpec(**SMALL, frames=400)
    thr = efficiency_at_fer(spec, 0.1, (4.0, 12.0))
    assert thr.ok
    crossing = center + np.log(9) / 3.0
    assert abs(thr.snr_db - crossing) < 0.15
    assert thr.point.ci_lo <= 0.1 + 0.02 and thr.point.ci_hi >= 0.1 - 0.02
    assert len(thr.probes) >= 3


def test_bisection_out_of_range(monkeypatch):
    monkeypatch.setattr(engine.FrameRunner, "point", _synthetic_point(30.0))
    thr = efficiency_at_fer(ExperimentSpec(**SMALL), 0.1, (4.0, 12.0))
    assert thr.status == "out_of_range" and np.isnan(thr.beta)
    assert to_records(thr)[0]["status"] == "out_of_range"


def test_snr_for_beta_inverts_beta():
    from nbrecon.protocol import beta_at
    from nbrecon.quantizer import QuantizationGrid, SymbolSplit
    from nbrecon.source import db_to_linear, snr_to_rho
    snr = snr_for_beta(5, 3, 8.0, 0.7, 0.9)
    rho = snr_to_rho(float(db_to_linear(snr)))
    assert beta_at(QuantizationGrid(8, 8), SymbolSplit(5, 3), 0.7, rho) == pytest.approx(0.9, abs=1e-9)
    with pytest.raises(ValueError):
        snr_for_beta(5, 0, 0.5, 0.01, 0.9)
    grid = waterfall_grid(5, 3, 8.0, 0.7)
    assert len(grid) == 7 and np.all(np.diff(grid) > 0)


def test_d_study_and_alpha_sweep_shapes():
    spec = ExperimentSpec(**SMALL, snr_db=(6.0,), frames=20, min_frames=20)
    rows = d_saturation_study(spec, (1, 2))
    assert [r.value for r in rows] == [1, 2]
    recs = to_records(rows)
    assert recs[0]["d"] == 1 and "fer" in recs[0]
    out = alpha_sweep(spec.replace(frames=20, min_frames=20), (4.0, 6.0), p=6)
    assert [a for a, _ in out] == [4.0, 6.0]
    assert all(t.status in ("ok", "out_of_range") for _, t in out)


def test_csv_round_trip(tmp_path):
    spec = ExperimentSpec(**SMALL, snr_db=(5.0, 7.0), frames=20, min_frames=20)
    res = fer_sweep(spec)
    path = emit_csv(res, tmp_path / "sub" / "r.csv", rate=0.5)
    header = path.read_text().splitlines()[0].split(",")
    assert header[:9] == ["rate", "snr_db", "rho", "fer", "ci_lo", "ci_hi", "beta", "frames", "iters_mean"]
    back = read_csv(path)
    for rec, pt in zip(back, res.points):
        assert rec["snr_db"] == pt.snr_db and rec["rho"] == pt.rho and rec["fer"] == pt.fer
        assert rec["ci_hi"] == pt.ci_hi and rec["frames"] == pt.frames and rec["beta"] == pt.beta
    with pytest.raises(OSError, match="nope"):
        read_csv(tmp_path / "nope.csv")


def test_csv_io_error_has_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        emit_csv([{"a": 1}], blocker / "out.csv")


def test_snr_grid_parsing():
    assert parse_snr_grid("8,9,10") == (8.0, 9.0, 10.0)
    assert parse_snr_grid("8:10:0.5") == (8.0, 8.5, 9.0, 9.5, 10.0)
    with pytest.raises(ValueError):
        parse_snr_grid("8:10:0")


def test_config_parsing():
    text = """
    # waterfall
    q = 4
    rate = 0.6   # code rate
    snr_db = 5:6:0.5
    frames = 30
    code_file = none
    workers = 2
    """
    values = parse_config(text)
    assert values == {"q": 4, "rate": 0.6, "snr_db": (5.0, 5.5, 6.0), "frames": 30, "code_file": None,
                      "workers": 2}
    with pytest.raises(ValueError, match=":2: unknown key"):
        parse_config("q = 4\nbogus = 1")
    with pytest.raises(ValueError, match=":1: bad value"):
        parse_config("n = lots")
    with pytest.raises(ValueError, match="key = value"):
        parse_config("frames 30")


def _run_cli(args, capsys):
    code = cli.main(args)
    return code, capsys.readouterr()


def test_cli_construct_and_fer(tmp_path, capsys):
    code_path = tmp_path / "c.txt"
    assert _run_cli(["construct", "--q", "4", "--n", "200", "--rate", "0.5", "-o", str(code_path)], capsys)[0] == 0
    assert code_path.read_text().startswith("nbrecon-code 1\nq 4\npoly 0x13\nn 200\nm 100\n")
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(f"q = 4\nn = 200\nrate = 0.5\nalpha = 6\nd = 2\nframes = 20\nmin_frames = 20\n"
                   f"code_file = {code_path}\n")
    out = tmp_path / "f.csv"
    rc, io = _run_cli(["fer", "--config", str(cfg), "--snr", "5,7", "-o", str(out)], capsys)
    assert rc == 0 and str(out) in io.out
    rows = read_csv(out)
    assert [r["snr_db"] for r in rows] == [5.0, 7.0] and all(r["frames"] == 20 for r in rows)


def test_cli_other_commands(tmp_path, capsys):
    base = ["--q", "4", "--n", "200", "--rate", "0.5", "--alpha", "6", "--d", "2", "--frames", "20",
            "--min-frames", "20"]
    rc, _ = _run_cli(["efficiency", *base, "--range", "3,9", "-o", str(tmp_path / "e.csv")], capsys)
    assert rc == 0 and read_csv(tmp_path / "e.csv")[0]["status"] in ("ok", "out_of_range")
    rc, _ = _run_cli(["dstudy", *base, "--snr", "6", "--d-values", "1,2", "-o", str(tmp_path / "d.csv")], capsys)
    assert rc == 0 and [r["d"] for r in read_csv(tmp_path / "d.csv")] == [1, 2]
    rc, _ = _run_cli(["alphasweep", *base, "--alphas", "4,6", "--p", "6", "-o", str(tmp_path / "a.csv")], capsys)
    assert rc == 0 and [r["alpha"] for r in read_csv(tmp_path / "a.csv")] == [4.0, 6.0]


def test_cli_errors(tmp_path, capsys):
    rc, io = _run_cli(["fer", "--config", str(tmp_path / "missing.cfg")], capsys)
    assert rc == 2 and "missing.cfg" in io.err
    rc, io = _run_cli(["fer", "--q", "4", "-o", str(tmp_path / "x.csv")], capsys)
    assert rc == 2 and "SNR" in io.err
    rc, io = _run_cli(["reproduce", "fig4", "--d-values", "3", "--outdir", str(tmp_path)], capsys)
    assert rc == 2 and "d_values" in io.err


def test_cli_worker_count_does_not_change_bytes(tmp_path, capsys, monkeypatch):
    args = ["fer", "--q", "4", "--n", "200", "--rate", "0.5", "--alpha", "6", "--d", "2", "--frames", "30",
            "--min-frames", "10", "--max-errors", "5", "--snr", "4:6:1"]
    monkeypatch.setenv(engine.WORKERS_ENV, "1")
    assert _run_cli(args + ["-o", str(tmp_path / "one.csv")], capsys)[0] == 0
    monkeypatch.setenv(engine.WORKERS_ENV, "2")
    assert _run_cli(args + ["-o", str(tmp_path / "two.csv")], capsys)[0] == 0
    assert (tmp_path / "one.csv").read_bytes() == (tmp_path / "two.csv").read_bytes()


def test_code_file_mismatch(tmp_path):
    save(make_code(4, 200, 0.5), tmp_path / "c.txt")
    spec = ExperimentSpec(q=5, n=200, code_file=str(tmp_path / "c.txt"), snr_db=(5,))
    with pytest.raises(ValueError, match="q=4"):
        spec.code()


def test_reproduce_unknown():
    with pytest.raises(ValueError, match="unknown figure"):
        reproduce("fig9")


@pytest.mark.slow
def test_reproduce_fig1_smoke(tmp_path):
    path = reproduce("fig1", tmp_path, frames=100)
    rows = read_csv(path)
    assert sorted({r["rate"] for r in rows}) == [0.5, 0.6, 0.7]
    for rate in (0.5, 0.6, 0.7):
        curve = [r for r in rows if r["rate"] == rate]
        assert len(curve) == 7 and all(r["frames"] >= 100 or r["errors"] >= 100 for r in curve)
