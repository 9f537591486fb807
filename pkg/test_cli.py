import io
import os
import json
import shutil
import tempfile
import contextlib

from nose.tools import (
    assert_equal,
    assert_almost_equal,
    assert_less,
    assert_greater,
    assert_true,
    assert_in,
    assert_raises,
)

from sylab import bubble, cli, common, torus
from sylab.common import NotConvergedError


@contextlib.contextmanager
def tempdir():
    tmp = tempfile.mkdtemp()
    try:
        yield tmp
    finally:
        shutil.rmtree(tmp)


@contextlib.contextmanager
def patched(module, name, value):
    original = getattr(module, name)
    setattr(module, name, value)
    try:
        yield
    finally:
        setattr(module, name, original)


def run(*argv):
    stdout, stderr = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(stdout), \
            contextlib.redirect_stderr(stderr):
        code = cli.main([str(arg) for arg in argv])
    return code, stdout.getvalue(), stderr.getvalue()


def load(path):
    with open(path) as f:
        return json.load(f)


def test_usage_errors():
    """Unknown commands and flags exit with 1"""
    assert_equal(run()[0], 1)
    assert_equal(run("sphere")[0], 1)
    assert_equal(run("bubble", "--lambda", "x")[0], 1)
    assert_equal(run("torus", "--frobnicate")[0], 1)


def test_bubble_command():
    """Profile, report and manifest are written, JSON printed"""
    with tempdir() as tmp:
        code, stdout, stderr = run("bubble", "--lambda", 1, "--p", 3,
                                   "--out", tmp, "--json")
        assert_equal(code, 0)
        payload = json.loads(stdout)
        manifest = load(os.path.join(tmp, "manifest.json"))

        for name in manifest["outputs"]:
            assert_true(os.path.exists(os.path.join(tmp, name)))

    assert_greater(payload["report"]["mu0"], 0.0)
    assert_in("mu0", stderr)
    assert_equal(manifest["command"], "bubble")
    assert_equal(manifest["config"]["lam"], 1.0)
    assert_equal(sorted(manifest["outputs"]), ["profile.csv", "report.json"])
    assert_equal(manifest["error"], None)
    assert_greater(manifest["stats"]["shoot_count"], 0)
    assert_equal(manifest["stats"]["inner_solve_count"], 0)
    assert_equal(manifest["version"], common.version())


def test_bubble_exponent_out_of_range():
    """p = 5 is a usage error"""
    with tempdir() as tmp:
        code, stdout, _ = run("bubble", "--p", 5, "--out", tmp, "--json")
    assert_equal(code, 1)
    assert_equal(json.loads(stdout)["error"], "USAGE")


def test_numerical_value_error():
    """A ValueError raised inside the numerics is not a usage error"""

    def failing(params):
        raise ValueError("array must not contain infs or NaNs")

    with tempdir() as tmp, patched(bubble, "findGroundState", failing):
        code, stdout, stderr = run("bubble", "--out", tmp, "--json")
        manifest = load(os.path.join(tmp, "manifest.json"))

    assert_equal(code, 2)
    assert_equal(json.loads(stdout)["error"], "NUMERICAL_FAILURE")
    assert_equal(manifest["error"]["error"], "NUMERICAL_FAILURE")
    assert_in("infs", stderr)


def test_version():
    """--version prints the package version"""
    stdout = io.StringIO()
    with contextlib.redirect_stdout(stdout):
        assert_raises(SystemExit, cli.main, ["--version"])
    assert_equal(stdout.getvalue().strip(), "sylab " + common.version())


def test_bubble_scaling():
    """Doubling lambda doubles mu0"""
    with tempdir() as tmp:
        _, one, _ = run("bubble", "--lambda", 1, "--out", tmp, "--json")
        _, two, _ = run("bubble", "--lambda", 2, "--out", tmp, "--json")

    ratio = (json.loads(two)["report"]["mu0"] /
             json.loads(one)["report"]["mu0"])
    assert_almost_equal(ratio, 2.0, delta=2e-6)


def test_theta_flat():
    """Flat tori have Theta = 0"""
    with tempdir() as tmp:
        code, stdout, _ = run("theta", "--chart", "flat", "--out", tmp,
                              "--json")
    assert_equal(code, 0)
    assert_equal(json.loads(stdout)["theta"]["theta"], 0.0)


def test_theta_sphere_ties():
    """Every point of the round sphere maximizes Theta"""
    with tempdir() as tmp:
        run("bubble", "--out", tmp)
        profile = os.path.join(tmp, "profile.csv")
        code, stdout, _ = run("theta", "--chart", "sphere:1", "--profile",
                              profile, "--argmax", "--curvature-csv", 16,
                              "--out", tmp, "--json")

        with open(os.path.join(tmp, "curvature.csv")) as f:
            header = f.readline().strip()

        manifest = load(os.path.join(tmp, "manifest.json"))

    assert_equal(code, 0)
    payload = json.loads(stdout)
    assert_true(payload["argmax"]["tie"])
    assert_almost_equal(payload["theta"]["K"], 1.0, places=8)
    assert_equal(header, "s,t,K")
    assert_equal(manifest["inputs"], [profile])
    assert_in("curvature.csv", manifest["outputs"])


def test_theta_torus_argmax():
    """Theta peaks on the outer equator of a torus of revolution"""
    with tempdir() as tmp:
        code, stdout, _ = run("theta", "--chart", "torus:2,1", "--argmax",
                              "--out", tmp, "--json")

    assert_equal(code, 0)
    argmax = json.loads(stdout)["argmax"]
    assert_almost_equal(argmax["K"], 1.0 / 3.0, places=8)
    assert_greater(argmax["theta"], 0.0)


def test_theta_invalid_chart():
    """Unknown charts are numerical failures with a code"""
    with tempdir() as tmp:
        code, stdout, stderr = run("theta", "--chart", "klein:1",
                                   "--out", tmp, "--json")
        manifest = load(os.path.join(tmp, "manifest.json"))

    assert_equal(code, 2)
    assert_equal(json.loads(stdout)["error"], "CHART_INVALID")
    assert_equal(manifest["error"]["error"], "CHART_INVALID")
    assert_in("klein", stderr)


def test_torus_command():
    """A small solve writes its result and field"""
    with tempdir() as tmp:
        code, stdout, _ = run("torus", "--eps", 0.5, "--grid", 32,
                              "--tol-outer", 1e-6, "--out", tmp, "--json")
        result = load(os.path.join(tmp, "result.json"))
        with open(os.path.join(tmp, "field.csv")) as f:
            lines = f.readlines()

    assert_equal(code, 0)
    assert_equal(json.loads(stdout)["result"]["mu_eps"], result["mu_eps"])
    assert_greater(result["mu_eps"], result["tau0"])
    assert_greater(result["tau0"], 0.0)
    assert_equal(lines[0].strip(), "i,j,abs_psi")
    assert_equal(len(lines), 32 * 32 + 1)


def test_torus_partial_results():
    """Running out of steps writes partial results and exits with 2"""
    with tempdir() as tmp:
        code, stdout, _ = run("torus", "--eps", 0.5, "--grid", 32,
                              "--max-outer", 2, "--tol-outer", 1e-12,
                              "--out", tmp, "--json")
        result = load(os.path.join(tmp, "result.json"))
        manifest = load(os.path.join(tmp, "manifest.json"))

    assert_equal(code, 2)
    assert_equal(json.loads(stdout)["error"], "NOT_CONVERGED")
    assert_true(not result["converged"])
    assert_equal(manifest["error"]["error"], "NOT_CONVERGED")
    assert_in("result.json", manifest["outputs"])


def test_torus_deterministic():
    """Identical random seeds reproduce identical files"""
    contents = []
    for _ in range(2):
        with tempdir() as tmp:
            run("torus", "--eps", 0.5, "--grid", 32, "--seed", "random:7",
                "--max-outer", 3, "--tol-outer", 1e-12, "--out", tmp)
            files = []
            for name in ("result.json", "field.csv"):
                with open(os.path.join(tmp, name), "rb") as f:
                    files.append(f.read())
            contents.append(files)

    assert_equal(contents[0], contents[1])


def test_torus_config_file():
    """Flags override values from --config"""
    config = torus.SolverConfig(eps=0.3, seed="random:2")
    with tempdir() as tmp:
        path = os.path.join(tmp, "config.json")
        with open(path, "w") as f:
            json.dump(config.dump(), f)

        args = cli.makeParser().parse_args(["torus", "--config", path,
                                            "--eps", "0.4", "--grid", "16"])
        loaded = cli._torusConfig(args)

    assert_equal(loaded.eps, 0.4)
    assert_equal(loaded.seed, "random:2")
    assert_equal(loaded.grid.N1, 16)


def test_torus_bad_spin_structure():
    """delta outside {0, 1/2} is a usage error"""
    with tempdir() as tmp:
        code, _, _ = run("torus", "--delta", "0.25,0", "--out", tmp)
    assert_equal(code, 1)


def test_torus_sweep_failure():
    """Failed sweep points are marked and exit with 2"""

    class Finished(object):
        mu_eps = 1.5
        width = 0.2
        decay_c = None
        grad_norm = 1e-9

    def fake(config, seed=None):
        if config.eps == 0.4:
            raise NotConvergedError("stuck")
        return Finished()

    with tempdir() as tmp, patched(torus, "minimizeNehari", fake):
        code, stdout, _ = run("torus", "--sweep", "0.4,0.2", "--out", tmp,
                              "--json")
        with open(os.path.join(tmp, "sweep.csv")) as f:
            lines = f.readlines()

    assert_equal(code, 2)
    payload = json.loads(stdout)
    assert_equal(payload["error"], "NOT_CONVERGED")
    assert_equal([row["status"] for row in payload["sweep"]],
                 ["NOT_CONVERGED", "OK"])
    assert_equal(lines[0].strip(), "eps,mu_eps,width,decay_c,grad_norm")
    assert_equal(len(lines), 3)
    assert_less(abs(float(lines[2].split(",")[1]) - 1.5), 1e-15)
