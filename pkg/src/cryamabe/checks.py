"""Named pass/fail checks shared by the command line and the acceptance suite."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .calculus import FrameCalculus
from .initial_data import (TorsionFreeParams, curvature_closed_form, curvature_formula,
                           torsion_free_lambda, verify_torsion_free)
from .polynomial import (poly_covariant_second, poly_frame_derivative, poly_sublaplacian,
                         random_smooth_field)
from .sphere import HopfGrid, build_grid
from .transform import webster_curvature

PASS, FAIL, NOT_RUN = "pass", "fail", "not-run"


@dataclass
class Check:
    name: str
    value: float | None
    tolerance: float | None
    status: str
    detail: str = ""

    @classmethod
    def upper(cls, name, value, tol, detail=""):
        ok = value is not None and np.isfinite(value) and value <= tol
        return cls(name, float(value), float(tol), PASS if ok else FAIL, detail)

    @classmethod
    def lower(cls, name, value, bound, detail=""):
        ok = value is not None and np.isfinite(value) and value >= bound
        return cls(name, float(value), float(bound), PASS if ok else FAIL, detail)

    @property
    def passed(self):
        return self.status == PASS

    def to_dict(self):
        return asdict(self)

    def line(self):
        v = "-" if self.value is None else f"{self.value:.4g}"
        t = "-" if self.tolerance is None else f"{self.tolerance:.4g}"
        return f"{self.status.upper():7s} {self.name:40s} value={v:>11s} tol={t:>11s} {self.detail}"


def all_passed(checks):
    return all(c.status != FAIL for c in checks)


# -- operators ----------------------------------------------------------------

def operator_errors(grid: HopfGrid, order=8):
    """Max errors of the discrete operators against exact expressions."""
    calc = FrameCalculus(grid, order)
    z1 = np.broadcast_to(grid.z1, grid.shape)
    z2 = np.broadcast_to(grid.z2, grid.shape)
    return {
        "sublaplacian_re_z1": float(np.max(np.abs(calc.sublaplacian(z1.real) + 0.5 * z1.real))),
        "sublaplacian_abs_z1_sq": float(np.max(np.abs(
            calc.sublaplacian(np.abs(z1) ** 2) - (np.abs(z2) ** 2 - np.abs(z1) ** 2)))),
    }


def polynomial_errors(grid: HopfGrid, order=8, seeds=(0, 1, 2), degree=4):
    """Largest error relative to the exact polynomial's max, per operator."""
    calc = FrameCalculus(grid, order)
    out = {}

    def put(key, num, exact):
        ex = exact.evaluate(grid.z1, grid.z2)
        scale = max(float(np.max(np.abs(ex))), 1.0)
        out[key] = max(out.get(key, 0.0), float(np.max(np.abs(num - ex))) / scale)

    for s in seeds:
        f, P = random_smooth_field(s, degree, grid)
        for d in ("Z1", "Z1bar", "T"):
            put(d, calc.frame_derivative(f, d), poly_frame_derivative(P, d))
        put("sublaplacian", calc.sublaplacian(f), poly_sublaplacian(P))
        for key, num, ex in zip(("f11", "f11bar", "f1bar1"), calc.covariant_second(f),
                                poly_covariant_second(P)):
            put(key, num, ex)
    return out


def commutation_identity(degree=4, seeds=range(5)):
    """Exact check of ``f_{,1 1bar} - f_{,1bar 1} = i T f`` on random polynomials."""
    from .polynomial import I
    for s in seeds:
        _, P = random_smooth_field(s, degree)
        _, a, b = poly_covariant_second(P)
        if not (a - b - poly_frame_derivative(P, "T") * I).is_zero():
            return False
    return True


def operator_checks(grid: HopfGrid, order=8, exact_tol=1e-6, poly_tol=1e-3, refine=True):
    checks = [Check.upper(k, v, exact_tol) for k, v in operator_errors(grid, order).items()]
    checks += [Check.upper(f"polynomial_{k}", v, poly_tol, "relative")
               for k, v in polynomial_errors(grid, order).items()]
    checks.append(Check("commutation_identity_exact", None, None,
                        PASS if commutation_identity() else FAIL))
    if refine and grid.n_eta >= 8 and grid.n_eta % 2 == 0:
        coarse = build_grid(grid.n_eta // 2, grid.n_xi1, grid.n_xi2)
        e_c = operator_errors(coarse, order)["sublaplacian_abs_z1_sq"]
        e_f = operator_errors(grid, order)["sublaplacian_abs_z1_sq"]
        rate = float(np.log2(e_c / e_f)) if e_f > 0 else np.inf
        checks.append(Check.lower("eta_refinement_order", rate, 1.9,
                                  f"{coarse.n_eta}->{grid.n_eta}"))
    return checks


# -- initial data ---------------------------------------------------------------

def initial_data_checks(p: TorsionFreeParams, grid: HopfGrid, order=8, torsion_tol=1e-6,
                        curvature_tol=1e-4, exact_points=10, published_formula=False):
    calc = FrameCalculus(grid, order)
    lam = torsion_free_lambda(p, grid)
    w = webster_curvature(calc, lam)
    w_exact = curvature_closed_form(p)
    rep = verify_torsion_free(p, grid, order, exact_points=exact_points)
    checks = [
        Check.upper("torsion_free_equation_residual", rep.equation_residual, torsion_tol),
        Check.upper("torsion_max_abs", rep.torsion, torsion_tol),
        Check.upper("curvature_vs_closed_form_rel",
                    float(np.max(np.abs(w - w_exact))) / abs(w_exact), curvature_tol),
        Check.lower("curvature_min", float(np.min(w)), 0.0, "positivity"),
    ]
    if rep.exact_residual is not None:
        checks.append(Check.upper("torsion_free_exact_residual", float(rep.exact_residual) ** 0.5,
                                  1e-12, "rational arithmetic"))
    formula = curvature_formula(p, grid)
    rel = float(np.max(np.abs(w - formula) / np.abs(formula)))
    if published_formula:
        checks.append(Check.upper("curvature_vs_pointwise_formula_rel", rel, curvature_tol))
    else:
        checks.append(Check("curvature_vs_pointwise_formula_rel", rel, curvature_tol, NOT_RUN,
                            "informational; request with --check-pointwise-formula"))
    return checks


# -- flow runs --------------------------------------------------------------------

GROWTH_FACTOR = 10.0


def harnack_tolerance(result, factor=GROWTH_FACTOR):
    """``factor`` times the t = 0 grid error of ``Lap_b W`` when W is exactly
    constant, unless the config fixes an absolute value."""
    tol = result.config.tolerances.get("harnack_abs")
    if tol in (None, "auto"):
        return factor * result.initial_levels["max_abs_lap_W"]
    return float(tol)


def flow_checks(result, torsion_free=None, growth=GROWTH_FACTOR):
    """Checks on a finished run; ``torsion_free`` defaults to whether the
    initial data came from explicit torsion-free parameters."""
    cfg = result.config
    tol = cfg.tolerances
    if torsion_free is None:
        torsion_free = cfg.initial is not None and not cfg.perturbation.amplitude
    checks = [Check("run_completed", result.final_state.t, cfg.t_end,
                    PASS if result.event.kind == "completed" else FAIL, result.event.kind)]
    if not result.trace:
        return checks + [Check("trace_nonempty", 0.0, 1.0, FAIL)]
    t = result.column("t")
    min_w = np.concatenate([[result.initial_levels["min_W"]], result.column("min_W")])
    rel_drop = np.diff(min_w) / np.abs(min_w[:-1])
    checks.append(Check.lower("min_W_nondecreasing_rel", float(np.min(rel_drop)), -tol["monotone_rel"]))
    c = min_w[0]
    bound = c / (1.0 - 2.0 * c * t)
    checks.append(Check.lower("min_W_minus_comparison_bound", float(np.min(min_w[1:] - bound)),
                              -tol["lower_bound_abs"]))
    h_tol = harnack_tolerance(result)
    if result.harnack:
        checks.append(Check.lower("min_Y", min(r["min_Y"] for r in result.harnack), -h_tol,
                                  f"t >= {cfg.t_min:g}"))
        checks.append(Check.lower("min_differential_harnack_residual",
                                  min(r["min_diff_residual"] for r in result.harnack), -h_tol))
    else:
        checks.append(Check("min_Y", None, -h_tol, NOT_RUN, "no levels after t_min"))
    monitored = [("max_abs_A11", "max_abs_A11"), ("max_abs_W0", "max_abs_W0"),
                 ("max_abs_W11", "max_abs_W11")]
    if cfg.cartan:
        monitored.append(("max_abs_Q11", "max_abs_Q11"))
    for col, key in monitored:
        name = f"{col}_growth"
        if not torsion_free:
            checks.append(Check(name, None, growth, NOT_RUN, "initial data not torsion free"))
            continue
        ratio = float(np.max(result.column(col))) / result.initial_levels[key]
        checks.append(Check.upper(name, ratio, growth, "max over trace / t=0 level"))
    return checks
