"""Print lhs / shape ratios over the default bound sweeps.

Used once to pick the frozen constants in heat_kernel.BOUND_CONSTANTS
(each ~1.1x the max ratio on its sweep) and to confirm the sweep keeps
the lhs/rhs ratio within a factor 3 where uniformity is asserted.
"""

import math
import time

from spde_lab.heat_kernel import DEFAULT_SWEEPS, HeatKernel, PI


def shape(lemma, params):
    th = params.get("theta")
    if lemma == "A1":
        return 1.0 / math.sqrt(params["w"] * params["v"])
    if lemma == "A2":
        return params["beta"] ** (-1.0 / th)
    if lemma == "A3":
        h = abs(params["x"] - params["xp"])
        return h * math.log(max(math.e, 1.0 / h)) if th == 1 else h
    if lemma == "A5":
        return math.sqrt(params["eps"])
    if lemma == "A6":
        return params["eps"] ** (1.0 / th)
    return None


def main():
    k = HeatKernel()
    for lemma in ("A1", "A2", "A3", "A5", "A6"):
        print(f"== {lemma}")
        groups = {}
        for params in DEFAULT_SWEEPS[lemma]:
            t0 = time.perf_counter()
            rep = k.verify_green_bound(lemma, params)
            el = time.perf_counter() - t0
            r = rep.lhs / shape(lemma, params)
            key = params.get("theta")
            groups.setdefault(key, []).append(r)
            print(f"  {params}  lhs={rep.lhs:.6e} ratio={r:.4f} "
                  f"qerr={rep.quadrature_error:.2e} margin={rep.margin:.3e} "
                  f"verdict={rep.verdict} [{el:.2f}s]")
        for key, rs in groups.items():
            print(f"  theta={key}: max_ratio={max(rs):.4f} "
                  f"suggest C={1.1 * max(rs):.4f} spread={max(rs)/min(rs):.3f}")


if __name__ == "__main__":
    main()
