import numpy as np
import pytest

from tensortomo import cli, samples
from tensortomo.ray_transform import Ray, write_ray_batch
from tensortomo.tensor_fields import read_field, read_field_csv, write_field

FAST = "grid = 33\neta_count = 4\ng_centers = 0 0.3\nlambdas = 0 1\n"


def run(tmp_path, name, *args, config=None):
    out = tmp_path / name
    argv = ["--out", str(out), *args]
    if config is not None:
        cfg = tmp_path / f"{name}.cfg"
        cfg.write_text(config)
        argv += ["--config", str(cfg)]
    return cli.main(argv), out


def test_show_config(capsys):
    assert cli.main(["--show-config"]) == 0
    text = capsys.readouterr().out
    for key in cli.SCHEMA:
        assert f"{key} = " in text


def test_verify_mode(tmp_path):
    code, out = run(tmp_path, "v", "--mode", "verify")
    assert code == 0
    lines = (out / "verify.csv").read_text().splitlines()
    assert lines[0] == "suite,check,value,threshold,passed"
    assert lines[1] == "-,-,1,1,bool"
    assert all(line.endswith(",1") for line in lines[2:])


def test_transform_deterministic(tmp_path):
    code1, a = run(tmp_path, "a", "--mode", "transform", "--seed", "7", config="num_rays = 12\nfield_rank = 1\n")
    code2, b = run(tmp_path, "b", "--mode", "transform", "--seed", "7", "--threads", "3", config="num_rays = 12\nfield_rank = 1\n")
    assert code1 == code2 == 0
    assert (a / "transform.csv").read_bytes() == (b / "transform.csv").read_bytes()
    lines = (a / "transform.csv").read_text().splitlines()
    assert lines[0].startswith("x1,x2,x3,xi1") and lines[1].startswith("length")
    assert len(lines) == 14


def test_transform_with_files(tmp_path):
    f = samples.sample_field(1, num=17)
    write_field(f, tmp_path / "f.mrtf")
    write_ray_batch(tmp_path / "r.csv", [Ray([0, 0, 0], [1, 0, 0]), Ray([0.1, 0, 0], [0, 0.6, 0.8])], [0, 2])
    code, out = run(tmp_path, "t", "--mode", "transform", config=f"field = {tmp_path / 'f.mrtf'}\nrays = {tmp_path / 'r.csv'}\n")
    assert code == 0
    assert len((out / "transform.csv").read_text().splitlines()) == 4


def test_threads_precedence(tmp_path, monkeypatch):
    args = cli.make_parser().parse_args(["--config", str(tmp_path / "c.cfg")])
    (tmp_path / "c.cfg").write_text("threads = 2\n")
    assert cli.build_config(args, env={})["threads"] == 2
    assert cli.build_config(args, env={"TENSORTOMO_THREADS": "5"})["threads"] == 5
    args = cli.make_parser().parse_args(["--config", str(tmp_path / "c.cfg"), "--threads", "3"])
    assert cli.build_config(args, env={"TENSORTOMO_THREADS": "5"})["threads"] == 3
    monkeypatch.setenv("TENSORTOMO_THREADS", "4")
    code, out = run(tmp_path, "e", "--mode", "transform", config="num_rays = 3\n")
    assert code == 0
    assert "threads = 4" in (out / "config_resolved.txt").read_text()


def test_recover_zero_equal(tmp_path):
    code, out = run(tmp_path, "z", "--mode", "recover", config=FAST + "wset = zero\n")
    assert code == 0
    assert "verdict: equal" in (out / "report.txt").read_text()
    stages = (out / "stages.csv").read_text().splitlines()
    assert stages[0].startswith("j,r,l,p") and len(stages) == 6


def test_recover_planted_reports_difference(tmp_path):
    code, out = run(tmp_path, "p", "--mode", "recover", config=FAST + "wset = planted_top\n")
    assert code == 0
    text = (out / "report.txt").read_text()
    assert "verdict: different" in text and "first failure: (j=0, l=0" in text


def test_decay_mode(tmp_path):
    code, out = run(tmp_path, "d", "--mode", "decay", config=FAST + "wset = shipped\n")
    lines = (out / "decay.csv").read_text().splitlines()
    assert lines[0].startswith("h,abs_cross_plus") and lines[1].startswith("1,")
    mags = np.array([[float(v) for v in line.split(",")[1:3]] for line in lines[2:]])
    assert np.all(np.diff(mags, axis=0) < 0)
    assert code == 0


def test_decay_threshold_fails(tmp_path):
    code, _ = run(tmp_path, "d", "--mode", "decay", config=FAST + "decay_ratio = 0.01\n")
    assert code == 1


def test_demo(tmp_path):
    code, out = run(tmp_path, "demo", "--mode", "demo", config="eta_count = 4\n")
    assert code == 0
    for name in ("sample_rank2.mrtf", "sample_rank2.csv", "rays.csv", "moments_rank1.csv", "stages.csv", "report.txt", "decay.csv", "config_resolved.txt"):
        assert (out / name).exists()
    f = read_field(out / "sample_rank2.mrtf")
    assert f.dims == (33, 33, 33) and f.m == 2
    np.testing.assert_array_equal(read_field_csv(out / "sample_rank2.csv").data, f.data)


@pytest.mark.parametrize(
    "config",
    [
        "bogus = 1\n",
        "mode = nonsense\n",
        "seed = abc\n",
        "threads = 0\n",
        "field = /does/not/exist.mrtf\n",
        "no equals sign\n",
        "mode = decay\nmu1 = 1 1 0\n",
        "mode = recover\nwset = files\nm = 1\n",
    ],
)
def test_usage_errors(tmp_path, config, capsys):
    code, _ = run(tmp_path, "u", config=config)
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_bad_field_file(tmp_path):
    (tmp_path / "bad.mrtf").write_bytes(b"nonsense")
    code, _ = run(tmp_path, "b", "--mode", "transform", config=f"field = {tmp_path / 'bad.mrtf'}\n")
    assert code == 2


def test_bad_ray_batch(tmp_path):
    (tmp_path / "r.csv").write_text("x1,x2,x3,xi1,xi2,xi3,k\n0,0,0,0,0,0,1\n")
    code, _ = run(tmp_path, "r", "--mode", "transform", config=f"rays = {tmp_path / 'r.csv'}\n")
    assert code == 2


def test_wset_files_support_error(tmp_path):
    grid = samples.half_grid(17)
    low = samples.bump_field(0, grid, (0, 0, 0.1), (0.3, 0.3, 0.3), [1.0])
    write_field(low, tmp_path / "w0.mrtf")
    code, _ = run(tmp_path, "s", "--mode", "recover", config=f"wset = files\nm = 1\nW0 = {tmp_path / 'w0.mrtf'}\n")
    assert code == 2


def test_argparse_bad_mode():
    with pytest.raises(SystemExit) as exc:
        cli.main(["--mode", "bogus"])
    assert exc.value.code == 2
