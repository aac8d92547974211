import json
import math

import numpy as np
import pytest

tf = pytest.importorskip("tightfeed")


def companion_rate(c, eps, eta):
    s = math.sqrt(eps)
    beta = 1 - eta * c - s * (1 + eta * c)
    roots = np.roots([1.0, -beta, -s])
    return float(np.max(np.abs(roots)) ** 2)


def test_step_and_rate():
    assert tf.optimal_step_size(0.5, 1.0, 0.25) == pytest.approx(4 / 9, abs=1e-15)
    r = tf.optimal_rate("ef", 0.5, 1.0, 0.25)
    assert r["rho"] == pytest.approx(0.63256, abs=5e-6)
    assert r["rho"] == pytest.approx(companion_rate(0.5, 0.25, 4 / 9), abs=1e-12)
    assert tf.optimal_rate("ef21", 0.5, 1.0, 0.25)["rho"] == r["rho"]


def test_gd_limit():
    want = (0.9 / 1.1) ** 2
    assert tf.optimal_rate("ef", 0.1, 1.0, 0.0)["rho"] == pytest.approx(want, abs=1e-14)
    assert tf.search("ef", 0.1, 1.0, 0.0, 2 / 1.1)["rho"] == pytest.approx(want, abs=1e-5)


def test_bad_arguments_raise():
    with pytest.raises(ValueError):
        tf.optimal_rate("cgd", 0.5, 1.0, 0.25)
    with pytest.raises(ValueError):
        tf.optimal_step_size(1.0, 0.5, 0.25)


def test_certificates():
    rng = np.random.default_rng(3)
    for _ in range(20):
        mu, eps = rng.uniform(0.02, 0.95), rng.uniform(0.01, 0.98)
        for m in ("ef", "ef21"):
            assert tf.certificate_residual(m, mu, 1.0, eps) <= 1e-10


def test_worst_case_and_search_agree():
    eta = 4 / 9
    wc = tf.worst_case("ef21", 0.5, 1.0, 0.25, eta)
    assert wc["status"] == "optimal"
    assert wc["value"] == pytest.approx(0.6325556, abs=1e-6)
    gram = np.asarray(wc["gram"])
    assert np.linalg.eigvalsh(gram).min() >= -1e-8
    s = tf.search("ef21", 0.5, 1.0, 0.25, eta)
    assert s["converged"]
    assert s["rho"] == pytest.approx(wc["value"], abs=1e-5)
    assert np.trace(s["candidate"]["P"]) + s["candidate"]["p"] == pytest.approx(1.0, abs=1e-9)


def test_trajectory_ratio():
    x, ratios = tf.worst_case_trajectory("ef", 0.5, 0.25, 4 / 9, 200)
    assert len(x) == 201
    assert ratios[-1] == pytest.approx(tf.optimal_rate("ef", 0.5, 1.0, 0.25)["rho"], abs=1e-6)


def test_cycle():
    is_cycle, gap = tf.cycle_check("ef", 0.1, 1.0, 0.9, 1.8)
    assert is_cycle and gap > -1e-3


def test_sweep_csv():
    text = tf.sweep(["ef"], 0.2, 1.0, eps_res=2, eta_res=3)
    lines = text.strip().split("\n")
    assert lines[0] == "method,mu,L,eps,eta,rho,status"
    assert len(lines) == 7


def test_cli_passthrough():
    code, out, err = tf.run_cli(["rate", "--method", "ef", "--mu", "0.5", "--eps", "0.25", "--eta", "auto"])
    assert code == 0, err
    assert json.loads(out)["rho"] == pytest.approx(0.63256, abs=5e-6)
    assert tf.run_cli(["rate", "--nope"])[0] == 2
