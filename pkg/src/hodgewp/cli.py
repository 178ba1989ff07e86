"""Command-line interface: ``hodgewp <command> MODEL.json [options]``."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from . import __version__, oracles
from .family import ModelError, VHSModel, canonical_family, classic_family, quantum_correction, yukawa
from .field import QQi, as_float_array, max_abs, to_json_scalar
from .generate import random_point, random_rational_point, rng_from_seed
from .hodge import IN_D, HodgeError, HodgeFiltration
from .hyperkahler import HKError, HKModel, coordinate_coincidence, hc_membership, hk20_family, hk_E_matrices
from .modelio import ModelFileError, dump_model, load_model, model_digest
from .period import PeriodError, abelian_check, cy3_sigma, orbit_filtration
from .series import SeriesError, TruncatedSeries
from .wpgeom import (CURVATURE_CONVENTION, NABLA_CONVENTION, NOT_SYMMETRIC, GeometryError, curvature_at_base,
                     curvature_via_projection, geometry_at, symmetry_verdict, wp_metric_series, wp_potential)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_VERDICT = 3

COMMANDS = ("check-hodge-riemann", "expand-family", "quantum-correction", "yukawa", "wp-metric", "curvature",
            "nabla-r", "check-symmetric", "sigma", "abelian-check", "hk-domain", "hk-coincidence")

FD_NOTE = (f"central differences: step {oracles.DEFAULT_STEP:g} with {oracles.DEFAULT_LEVELS} Richardson levels "
           f"for metric derivatives; nabla R differentiates curvature (inner step {oracles.INNER_STEP:g}, "
           f"{oracles.INNER_LEVELS} levels) with outer step {oracles.NESTED_STEP:g} ({oracles.NESTED_LEVELS} levels)")


class CommandError(ValueError):
    pass


# -- parsing helpers -----------------------------------------------------------------

def parse_number(token: str):
    """'1/2' or '3' -> exact rational; anything else -> float."""
    token = token.strip()
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError):
        pass
    try:
        return float(token)
    except ValueError:
        raise CommandError(f"cannot parse number {token!r}") from None


def parse_coordinate(token: str):
    """'re' or 're:im' with rational or decimal parts."""
    parts = token.split(":")
    if len(parts) > 2 or not parts[0]:
        raise CommandError(f"coordinate {token!r} must be 're' or 're:im'")
    re = parse_number(parts[0])
    im = parse_number(parts[1]) if len(parts) == 2 else Fraction(0)
    if isinstance(re, Fraction) and isinstance(im, Fraction):
        return QQi(re, im)
    return complex(float(re), float(im))


def parse_point(text: str, N: int) -> list:
    coords = [parse_coordinate(t) for t in text.split(",")]
    if len(coords) != N:
        raise CommandError(f"point {text!r} has {len(coords)} coordinates, model needs {N}")
    return coords


def _is_int(text: str) -> bool:
    try:
        int(text)
        return True
    except ValueError:
        return False


# -- report helpers --------------------------------------------------------------------

def enc(a):
    if isinstance(a, (list, tuple)):
        return [enc(x) for x in a]
    a = np.asarray(a) if not isinstance(a, (QQi, complex, float, int, Fraction)) else a
    if isinstance(a, np.ndarray):
        if a.ndim == 0:
            return enc(a.item())
        return [enc(x) for x in a]
    return to_json_scalar(a)


def series_table(s: TruncatedSeries) -> list:
    return [{"holo": list(I), "anti": list(J), "coeff": enc(c)} for (I, J), c in s.items()]


class Report:
    def __init__(self, command: str, model, options: dict):
        self.data = {"command": command, "version": __version__, "model_digest": model_digest(model),
                     "inputs": options, "verdicts": {}, "tables": {}, "residuals": {}, "tolerances": {},
                     "conventions": {}}

    def verdict(self, name: str, value, ok: bool = True):
        self.data["verdicts"][name] = {"value": value, "ok": bool(ok)}

    def table(self, name: str, value, residual=None, tol=None):
        self.data["tables"][name] = value
        if residual is not None:
            self.data["residuals"][name] = residual
        if tol is not None:
            self.data["tolerances"][name] = tol

    def convention(self, name: str, text: str):
        self.data["conventions"][name] = text

    @property
    def all_ok(self) -> bool:
        return all(v["ok"] for v in self.data["verdicts"].values())

    def to_text(self) -> str:
        d = self.data
        lines = [f"{d['command']}  model {d['model_digest']}"]
        for k, v in d["verdicts"].items():
            lines.append(f"  verdict {k}: {v['value']}{'' if v['ok'] else '  [FAILED]'}")
        for k, v in d["residuals"].items():
            tol = d["tolerances"].get(k)
            lines.append(f"  residual {k}: {v:.3e}" + (f" (tol {tol:g})" if tol is not None else ""))
        for k, v in d["tables"].items():
            lines.append(f"  table {k}: {json.dumps(v)}")
        for k, v in d["conventions"].items():
            lines.append(f"  convention {k}: {v}")
        return "\n".join(lines)


# -- commands ------------------------------------------------------------------------------

def _vhs(model) -> VHSModel:
    return model.vhs if isinstance(model, HKModel) else model


def _require_weight3(model, command):
    if isinstance(model, HKModel) or _vhs(model).weight != 3:
        raise CommandError(f"{command} needs a weight-3 (cy3 or weight-3 abstract_vhs) model")


def _require_hk(model, command):
    if not isinstance(model, HKModel):
        raise CommandError(f"{command} needs a hyperkahler model")


def _sample_points(args, N: int, rng, exact_ok: bool) -> list:
    spec = args.points
    if spec is None:
        return []
    if _is_int(spec):
        count = int(spec)
        if exact_ok:
            return [random_rational_point(rng, N) for _ in range(count)]
        return [list(random_point(rng, N)) for _ in range(count)]
    return [parse_point(p, N) for p in spec.split(";") if p.strip()]


def _point(args, N):
    return parse_point(args.point, N) if args.point else [QQi(0)] * N


def cmd_check_hodge_riemann(model, args, rep: Report):
    vhs = _vhs(model)
    F = HodgeFiltration.reference(vhs.hodge, vhs.exact)
    t = _point(args, vhs.N)
    pt = orbit_filtration(vhs.E, t, F, vhs.polarization, args.tol)
    rep.verdict("hodge_riemann", pt.verdict, pt.verdict == IN_D)
    rep.verdict("connected_to_base", pt.connected_to_base, True)
    rep.table("first_relation_residual", pt.hr.first_relation_residual, pt.hr.first_relation_residual, args.tol)
    rep.table("positivity", {str(k): v for k, v in pt.hr.positivity.items()})
    rep.table("point", enc(t))


def cmd_expand_family(model, args, rep: Report):
    vhs = _vhs(model)
    cl = classic_family(vhs).coeffs
    ca = canonical_family(vhs).coeffs
    rep.table("classic", series_table(cl))
    rep.table("canonical", series_table(ca))
    # oracle: first row of exp(sum t_i E_i) at a sample point vs the classic series
    from .period import exp_nilpotent
    t = _point(args, vhs.N) if args.point else [QQi(Fraction(1, k + 2), Fraction(1, k + 3)) for k in range(vhs.N)]
    X = sum((np.asarray(vhs.E[i]) * t[i] for i in range(1, vhs.N)), np.asarray(vhs.E[0]) * t[0])
    res = max_abs(exp_nilpotent(X)[0] - cl.eval(t))
    rep.table("classic_vs_exp_row", enc(cl.eval(t)), res, args.tol)
    rep.verdict("classic_is_exp_row", res <= args.tol, res <= args.tol)
    rep.verdict("degree_one_unchanged", ca.homogeneous_part(1) == cl.homogeneous_part(1),
                ca.homogeneous_part(1) == cl.homogeneous_part(1))


def cmd_quantum_correction(model, args, rep: Report):
    qc = quantum_correction(_vhs(model), args.tol)
    rep.table("strong", series_table(qc.strong))
    rep.table("weak", enc(qc.weak))
    rep.verdict("strong_is_zero", qc.strong_is_zero)
    rep.verdict("weak_is_zero", qc.weak_is_zero)
    low = min((sum(I) + sum(J) for I, J in qc.strong.keys()), default=None)
    rep.verdict("lowest_strong_degree", low, low is None or low >= 2)


def cmd_yukawa(model, args, rep: Report):
    _require_weight3(model, "yukawa")
    vhs = _vhs(model)
    y = yukawa(vhs)
    qc = quantum_correction(vhs, args.tol)
    # oracle: bilinear identity correction = Q(f, d3 s) + Q(s, d3 f_cc)
    f = canonical_family(vhs).coeffs
    fc = classic_family(vhs).coeffs
    s = f - fc
    G = vhs.polarization.gram_Qtilde
    N = vhs.N
    worst = 0.0
    for i in range(N):
        for j in range(i, N):
            for k in range(j, N):
                ds = s.d(holo=(i, j, k)).with_order(f.max_order)
                dfc = fc.d(holo=(i, j, k)).with_order(f.max_order)
                alt = (f.dot(ds, G) + s.dot(dfc, G)).truncate(vhs.order)
                corr = y.correction.component((i, j, k))
                worst = max(worst, corr.max_abs_difference(alt))
    rep.table("full", series_table(y.full))
    rep.table("correction", series_table(y.correction), worst, args.tol)
    rep.table("classic_constant", enc(y.classic_constant))
    corr_zero = y.correction.is_zero(args.tol)
    deg1_zero = y.correction.homogeneous_part(1).is_zero(args.tol)
    rep.verdict("correction_is_zero", corr_zero)
    rep.verdict("degree1_correction_is_zero", deg1_zero)
    rep.verdict("correction_zero_iff_strong_zero", corr_zero == qc.strong_is_zero, corr_zero == qc.strong_is_zero)
    rep.verdict("degree1_zero_iff_weak_zero", deg1_zero == qc.weak_is_zero, deg1_zero == qc.weak_is_zero)
    rep.convention("pairing", "C_ijk(t) = Qtilde-bilinear pairing f^T M d^3 f, M the anti-diagonal (1, -I, I, -1) Gram")


def cmd_wp_metric(model, args, rep: Report):
    vhs = _vhs(model)
    pot = wp_potential(vhs)
    g = wp_metric_series(pot, args.order)
    rep.table("potential", series_table(pot.q))
    rep.table("metric_series", series_table(g))
    N = vhs.N
    z = (0,) * N
    g0 = g.coefficient(z)
    res0 = max_abs(as_float_array(g0) - np.eye(N))
    rep.table("metric_at_base", enc(g0), res0, args.tol)
    # degree-(1,1) coefficient vs delta delta + delta delta - q4
    q4 = pot.q4()
    worst = 0.0
    if args.order >= 4:
        for i in range(N):
            for j in range(N):
                I = tuple(1 if v == i else 0 for v in range(N))
                J = tuple(1 if v == j else 0 for v in range(N))
                c = as_float_array(g.coefficient(I, J))
                for k in range(N):
                    for l in range(N):
                        ref = (i == j) * (k == l) + (i == l) * (j == k) - complex(q4[i, k, j, l])
                        worst = max(worst, abs(c[k, l] - ref))
    rep.table("degree11_vs_q4", worst, worst, args.tol)
    rep.verdict("metric_identity_at_base", res0 <= args.tol, res0 <= args.tol)
    rep.convention("metric", "g_{k lbar} = -d_k dbar_l log q, q = Qtilde(Omega^c, conj Omega^c)")


def _curvature_tables(rep, r, args, nabla: bool):
    rep.table("point", enc(list(r.point)))
    rep.table("metric", enc(r.metric), r.residuals.get("metric"), 1e-6)
    rep.table("christoffel", enc(r.christoffel), r.residuals.get("christoffel"), 1e-6)
    rep.table("curvature", enc(r.curvature), r.residuals.get("curvature"), 1e-6)
    if nabla:
        rep.table("nabla_R", enc(r.nabla), r.residuals.get("nabla"), 1e-6)
        rep.table("nabla_bar_R", enc(r.nabla_bar), r.residuals.get("nabla"), 1e-6)
    rep.convention("curvature", CURVATURE_CONVENTION)
    rep.convention("nabla", NABLA_CONVENTION)
    rep.convention("oracle", FD_NOTE)


def _kaehler_symmetry_residual(R) -> float:
    R = as_float_array(R)
    return max(max_abs(R - np.transpose(R, (2, 1, 0, 3))), max_abs(R - np.transpose(R, (0, 3, 2, 1))))


def cmd_curvature(model, args, rep: Report):
    vhs = _vhs(model)
    t = _point(args, vhs.N)
    r = geometry_at(vhs, t)
    _curvature_tables(rep, r, args, nabla=False)
    sym = _kaehler_symmetry_residual(r.curvature)
    rep.table("kaehler_symmetry", sym, sym, args.tol)
    rep.verdict("oracle_agreement", r.residuals["curvature"] <= 1e-6, r.residuals["curvature"] <= 1e-6)
    rep.verdict("kaehler_symmetries", sym <= args.tol, sym <= args.tol)
    if all(x == 0 for x in t):
        proj = curvature_via_projection(vhs)
        rep.table("curvature_via_projection", enc(proj.curvature), proj.residual, 1e-10)
        rep.verdict("projection_formula_agrees", proj.residual <= 1e-10, proj.residual <= 1e-10)


def cmd_nabla_r(model, args, rep: Report):
    vhs = _vhs(model)
    t = _point(args, vhs.N)
    r = geometry_at(vhs, t)
    _curvature_tables(rep, r, args, nabla=True)
    if all(x == 0 for x in t):
        b = curvature_at_base(vhs, fd_oracle=False)
        rep.table("nabla_from_potential", enc(b.nabla_from_q5), b.residuals["nabla_vs_q5"], args.tol)
        rep.table("nabla_opposite_sign_convention", enc(b.nabla_alt_sign))
        rep.convention("nabla_sign", "nabla_r R_{i jbar k lbar}(0) = -q_{ikr, jbar lbar} by differentiating log q; "
                                     "the opposite-sign tensor +q_{ikr, jbar lbar} is reported alongside")
    rep.verdict("nabla_R_vanishes", r.max_nabla <= args.tol, True)
    rep.verdict("oracle_agreement", r.residuals["nabla"] <= 1e-6, r.residuals["nabla"] <= 1e-6)


def cmd_check_symmetric(model, args, rep: Report):
    vhs = _vhs(model)
    rng = rng_from_seed(args.seed)
    if args.points is None:
        args.points = "5"
    pts = _sample_points(args, vhs.N, rng, exact_ok=False)
    if isinstance(model, HKModel):
        pts = [p for p in pts if hc_membership(model, p).inside]
    v = symmetry_verdict(vhs, pts, tol=max(args.tol, 1e-6))
    rep.verdict("symmetry", v.verdict, v.verdict != NOT_SYMMETRIC)
    rep.table("nabla_R_at_base", v.base_max, v.base_max, max(args.tol, 1e-6))
    rep.table("samples", [{"point": enc(list(k)), "max_nabla_R": m, "fd_residual": v.fd_residuals[k]}
                          for k, m in v.sample_max.items()],
              max(v.fd_residuals.values(), default=0.0), 1e-6)
    rep.convention("oracle", FD_NOTE)


def cmd_sigma(model, args, rep: Report):
    _require_weight3(model, "sigma")
    vhs = _vhs(model)
    t = _point(args, vhs.N) if args.point else [QQi(Fraction(1, 2))] * vhs.N
    s = cy3_sigma(vhs, t)
    rep.table("point", enc(t))
    rep.table("sigma", enc(s.sigma))
    rep.table("E", enc(s.E))
    rep.table("sigma_T_M_sigma_minus_M", s.in_G_residual, s.in_G_residual, 0.0 if vhs.exact else args.tol)
    rep.table("sigma_minus_exp", s.exp_residual, s.exp_residual, 0.0 if vhs.exact else args.tol)
    rep.verdict("a_in_G", s.in_G, s.in_G)
    rep.verdict("b_equals_exp", s.equals_exp, s.equals_exp)
    rep.verdict("c_transversal", s.transversal, s.transversal)


def cmd_abelian_check(model, args, rep: Report):
    vhs = _vhs(model)
    ok, worst = abelian_check(vhs.E)
    rep.table("max_commutator", worst, worst, 0.0 if vhs.exact else args.tol)
    rep.verdict("abelian", ok, ok)
    if isinstance(model, HKModel):
        r = hk_E_matrices(model)
        rep.verdict("E_i_E_j_is_delta_corner", r.products_ok, r.products_ok)
        rep.verdict("exp_matches_display", r.exp_ok, r.exp_ok)
        rep.verdict("q_compatible", r.q_compat_ok, r.q_compat_ok)


def cmd_hk_domain(model, args, rep: Report):
    _require_hk(model, "hk-domain")
    t = _point(args, model.N)
    v = hc_membership(model, t, args.tol)
    rep.table("point", enc(t))
    rep.verdict("inside", v.inside, v.inside)
    rep.verdict("hodge_riemann", v.verdict)
    rep.verdict("connected_to_base", v.connected_to_base)
    rep.table("first_relation_residual", v.hr.first_relation_residual, v.hr.first_relation_residual, args.tol)
    rep.table("positivity_squared", v.positivity)
    rep.table("positivity_unsquared", v.positivity_unsquared)
    rep.convention("positivity", "1 - sum|tau_i|^2 + 1/4 |sum tau_i^2|^2 (top Hodge line); the unsquared variant "
                                 "1 - sum|tau_i|^2 + 1/4 |sum tau_i^2| is reported for comparison")


def cmd_hk_coincidence(model, args, rep: Report):
    _require_hk(model, "hk-coincidence")
    rng = rng_from_seed(args.seed)
    pts = [_point(args, model.N)] if args.point or args.points is None else _sample_points(args, model.N, rng, True)
    rows = []
    worst = 0.0
    for t in pts:
        r = coordinate_coincidence(model, t)
        worst = max(worst, r)
        rows.append({"point": enc(t), "residual": r})
    rep.table("coincidence", rows, worst, 0.0)
    rep.table("family", series_table(hk20_family(model).coeffs))
    rep.verdict("tau_equals_t", worst == 0.0, worst == 0.0)


HANDLERS = {
    "check-hodge-riemann": cmd_check_hodge_riemann,
    "expand-family": cmd_expand_family,
    "quantum-correction": cmd_quantum_correction,
    "yukawa": cmd_yukawa,
    "wp-metric": cmd_wp_metric,
    "curvature": cmd_curvature,
    "nabla-r": cmd_nabla_r,
    "check-symmetric": cmd_check_symmetric,
    "sigma": cmd_sigma,
    "abelian-check": cmd_abelian_check,
    "hk-domain": cmd_hk_domain,
    "hk-coincidence": cmd_hk_coincidence,
}


def run(command: str, model, options: argparse.Namespace) -> Report:
    if command not in HANDLERS:
        raise CommandError(f"unknown command {command!r}")
    vhs = _vhs(model)
    if options.order != vhs.order:
        if isinstance(model, HKModel):
            model = HKModel(model.N, model.n, vhs.with_order(options.order))
        else:
            model = vhs.with_order(options.order)
    inputs = {k: v for k, v in vars(options).items() if k not in ("func", "model", "format", "strict")}
    rep = Report(command, model, inputs)
    HANDLERS[command](model, options, rep)
    return rep


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hodgewp", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("model", help="model JSON file")
    common.add_argument("--order", type=int, default=6, help="series truncation order (default 6)")
    common.add_argument("--tol", type=float, default=1e-9, help="verdict tolerance (default 1e-9)")
    common.add_argument("--point", help="point as comma-separated coordinates 're' or 're:im' (e.g. 1/2:1/3,0)")
    common.add_argument("--points", help="sample count (random, seeded) or ';'-separated list of points")
    common.add_argument("--seed", type=int, default=0, help="PRNG seed (default 0)")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--strict", action="store_true", help="exit 3 when any verdict fails")
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HANDLERS[name].__name__.replace("cmd_", "").replace("_", " "))
    emit = sub.add_parser("emit-model", help="write the normalized model JSON")
    emit.add_argument("model")
    emit.add_argument("-o", "--output", help="output path (default stdout)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        model = load_model(args.model)
        if args.command == "emit-model":
            text = json.dumps(dump_model(model), indent=2)
            if args.output:
                with open(args.output, "w") as fh:
                    fh.write(text + "\n")
            else:
                print(text)
            return EXIT_OK
        rep = run(args.command, model, args)
    except (ModelFileError, ModelError, CommandError, HKError, PeriodError, GeometryError, HodgeError,
            SeriesError) as exc:
        print(f"hodgewp: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.format == "json":
        print(json.dumps(rep.data, indent=2))
    else:
        print(rep.to_text())
    if args.strict and not rep.all_ok:
        return EXIT_VERDICT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
