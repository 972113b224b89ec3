"""Smoke test for the ptq_sim extension module.

    pip install --no-build-isolation ./crates/py
    python python/smoke_test.py
"""

import math

import ptq_sim


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    p = ptq_sim.SystemParams(2.0, 0.4)
    assert p.gamma == 1.0 and p.phase() == "pts", p
    h = p.hamiltonian()
    assert len(h) == 4 and all(len(row) == 4 for row in h)
    assert close(sum(h[k][k] for k in range(4)), 0.0, 1e-12)

    e = ptq_sim.eigenvalues(p)
    assert close(e[0], -0.4, 1e-12), e
    assert close(sum(e), 0.0, 1e-10)
    assert all(abs(z.imag) < 1e-10 for z in e)

    values, vectors, source = ptq_sim.spectrum(p)
    for lam, v in zip(values, vectors):
        hv = [sum(h[r][c] * v[c] for c in range(4)) for r in range(4)]
        assert max(abs(hv[r] - lam * v[r]) for r in range(4)) < 1e-9, source

    diag = sorted(ptq_sim.eigenvalues(ptq_sim.SystemParams(0.0, 0.3)), key=lambda z: (z.real, z.imag))
    for got, want in zip(diag, [-0.3, -0.3, 0.3 - 1j, 0.3 + 1j]):
        assert close(got, want, 1e-12), diag

    ep = ptq_sim.locate_ep("j", 2.0, (0.3, 0.9))
    assert 0.586 <= ep["j_c"] <= 0.591, ep
    ep = ptq_sim.locate_ep("omega", 0.3, (1.2, 2.2))
    assert close(ep["omega_c"], 1.649, 2e-3), ep
    theta, dx = ptq_sim.residual(ptq_sim.SystemParams(ep["omega_c"], 0.3))
    assert abs(theta) < 1e-6 and abs(dx) < 1e-6

    bell = [1 / math.sqrt(2), 0, 0, 1 / math.sqrt(2)]
    assert close(ptq_sim.concurrence(bell), 1.0, 1e-12)
    assert close(ptq_sim.concurrence([1, 0, 0, 0]), 0.0, 1e-12)
    ptb = ptq_sim.SystemParams(2.0, 0.7)
    c3 = ptq_sim.eigenstate_concurrence(ptb, 3)
    c4 = ptq_sim.eigenstate_concurrence(ptb, 4)
    assert close(c3, c4, 1e-9), (c3, c4)

    traj = ptq_sim.evolve(ptb, t_max=40.0, stride=10)
    assert len(traj["t"]) == len(traj["concurrence"]) == 4001
    t_ss, c_ss = traj["steady_state"]
    assert 0.45 <= c_ss <= 0.55, c_ss

    first = ptq_sim.revivals(ptq_sim.SystemParams(1.7, 0.336))[0]
    later = ptq_sim.revivals(ptq_sim.SystemParams(1.7, 0.337))[0]
    assert 1.5 <= later / first <= 2.5, (first, later)

    f = ptq_sim.qfi(p, "j")
    assert f > 0.0
    sweep = ptq_sim.sensing_sweep("omega", 0.3, (1.4, 2.0), 50)
    assert len(sweep) == 50
    for point in sweep:
        if point["qfi"] is not None and point["inverse_variance"] is not None:
            assert point["inverse_variance"] <= point["qfi"] * (1 + 1e-6)

    for bad in (lambda: ptq_sim.SystemParams(1.0, 0.2, -1.0), lambda: ptq_sim.qfi(p, "gamma")):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")
    try:
        ptq_sim.locate_ep("j", 2.0, (0.1, 0.2))
    except ValueError as err:
        assert "no_sign_change" in str(err)
    assert issubclass(ptq_sim.NumericalError, RuntimeError)

    print("ptq_sim smoke test: ok")


if __name__ == "__main__":
    main()
