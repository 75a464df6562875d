"""Smoke test for the hecke3 Python bindings.

Install first:  pip install --no-build-isolation ./crates/python
Run:            python python/smoke_test.py [--full]

--full also builds the level-128 model and checks the eigenvalue report
(about a minute in release builds).
"""

import sys

import hecke3


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAIL: {what}")
    print(f"ok   {what}")


def main():
    check(hecke3.point_count(128) == 28672, "28672 points at level 128")
    check(hecke3.model_dimension(8) == 3, "model dimension 3 at level 8")

    m = hecke3.Model(8)
    check(m.dim == 3 and len(m.points) == m.level ** 2 * 7 // 4, repr(m))
    t3 = m.hecke_matrix("3,0,0;0,1,0;0,0,1", workers=2)
    check(all(t3[i][j] == ("13" if i == j else "0") for i in range(3) for j in range(3)), "T(3) = 13 at level 8")
    check(m.pair(0, [[1, 0, 0], [0, 1, 0], [0, 0, 1]]) == m.vector(0)[m.points.index((1, 0, 0))],
          "identity symbol pairs with the point (1:0:0)")

    check(len(hecke3.cosets(128, "3,0,0;0,1,0;0,0,1")) == 13, "13 cosets for diag(3,1,1)")
    check(hecke3.psi("1/2") == (1, 4), "psi(1/2) = i")
    rep, left, right = hecke3.normal_form([[1, 0, 0], [0, 1, 0], [2, 0, 1]])
    check(rep == "M1", f"normal form class {rep}")

    chain = dict(hecke3.lambda_chain(["2*i", "0", "-1", "8", "32", "8-8*i", "1"]))
    check(chain["chi2"] == "-2*i" and chain["lambda_u"] == "1*i", f"lambda chain {chain}")
    checks = hecke3.verify_rep(0)
    check(all(p for _, p, _ in checks), f"{len(checks)} audits pass")

    if "--full" in sys.argv:
        r = hecke3.Model(128)
        check(r.dim == 58, "dim 58 at level 128")
        got = [e for _, _, _, e in r.eigenreport()]
        check(got == ["2*i", "0", "-1", "8", "32", "8-8*i", "1"], f"eigenvalues {got}")
    print("smoke test passed")


if __name__ == "__main__":
    main()
