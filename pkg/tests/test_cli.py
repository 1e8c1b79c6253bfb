import pytest

from hopflab.cli import EXIT_CONFIG, EXIT_MISMATCH, EXIT_NUMERICAL, EXIT_OK, main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_profile_report(capsys):
    code, out = run(capsys, "profile", "--kind", "power", "--c", "1", "--p", "1.5", "--r0", "1",
                    "--K0", "1")
    assert code == EXIT_OK
    assert "dini Convergent I=2.000000000" in out.out
    assert "k0=2 R0=0.015625" in out.out


def test_profile_divergent(capsys):
    code, out = run(capsys, "profile", "--kind", "cone", "--K", "2", "--r0", "1")
    assert code == EXIT_OK and "dini Divergent" in out.out


def test_profile_csv(tmp_path, capsys):
    code, _ = run(capsys, "profile", "--kind", "power", "--c", "1", "--p", "2", "--k-max", "8",
                  "--csv", str(tmp_path / "seq.csv"))
    lines = (tmp_path / "seq.csv").read_text().splitlines()
    assert code == EXIT_OK and lines[0] == "k,r_k,h_k,theta_k,partial_sum" and len(lines) == 10


def test_bad_profile_exit_code(capsys):
    code, out = run(capsys, "profile", "--kind", "power", "--c", "-1", "--p", "1.5")
    assert code == EXIT_CONFIG and "config error" in out.err


def test_solve_and_analyze(tmp_path, capsys):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("id = disk\nkind = solve\nh = 2^-5\nbody.shape = ball\n"
                       "data.kind = constant\ndata.value = 1\n")
    code, out = run(capsys, "solve", "--config", str(cfgfile), "--out", str(tmp_path / "o"),
                    "--plotdata")
    assert code == EXIT_OK and "max_principle=PASS" in out.out
    assert (tmp_path / "o" / "u.csv").exists() and (tmp_path / "o" / "u.dat").exists()
    code, out = run(capsys, "analyze", str(tmp_path / "o" / "u.npz"), "--harnack", "0.25",
                    "--out", str(tmp_path / "a"))
    assert code == EXIT_OK and "ratio=1" in out.out
    assert (tmp_path / "a" / "harnack.csv").exists()


def test_solve_outputs_deterministic(tmp_path, capsys):
    for d in ("a", "b"):
        assert main(["solve", "--scenario", "T1.8-sphere", "--h", "2^-5", "--out",
                     str(tmp_path / d)]) == EXIT_OK
    capsys.readouterr()
    assert (tmp_path / "a" / "u.csv").read_bytes() == (tmp_path / "b" / "u.csv").read_bytes()


def test_rasterize_masks(tmp_path, capsys):
    code, out = run(capsys, "rasterize", "--scenario", "T1.9-cusp", "--h", "2^-5", "--out",
                    str(tmp_path))
    assert code == EXIT_OK and "boundary_gamma=" in out.out
    assert (tmp_path / "mask.pgm").read_text().startswith("P2")


def test_scenario_run_and_outputs(tmp_path, capsys):
    code, out = run(capsys, "scenario", "E1.6-reflex-cone", "--out", str(tmp_path))
    assert code == EXIT_OK and "E1.6-reflex-cone h=" in out.out and "PASS" in out.out
    assert (tmp_path / "E1.6-reflex-cone" / "checks.csv").exists()


def test_scenario_mismatch_exit(tmp_path, capsys):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("id = wrong\nkind = closedform\nprofile.kind = cone\nprobes.form = "
                       "cone_harmonic\nprobes.theta = pi/4\nprobes.hopf = 0,1\n"
                       "expect.hopf = BlowsUp\n")
    code, out = run(capsys, "sweep", "--config", str(cfgfile))
    assert code == EXIT_MISMATCH and "FAIL" in out.out


def test_numerical_error_exit(capsys):
    code, out = run(capsys, "scenario", "L1.2-exterior-sphere", "--h", "2^-5")
    assert code == EXIT_NUMERICAL and "InsufficientResolution" in out.err


def test_unknown_scenario(capsys):
    code, out = run(capsys, "scenario", "X9.9")
    assert code == EXIT_CONFIG


def test_list(capsys):
    code, out = run(capsys, "scenario", "--list")
    assert code == EXIT_OK and len(out.out.strip().splitlines()) >= 12


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as e:
        main(["solve", "--method", "nope"])
    assert e.value.code == 2
