"""Command-line front end.

Subcommands: generate, analyze, boost, balance, flow, verify, optimality,
compactness.  All flags are long-form; a TOML file passed with --config can
supply any flag, with explicit command-line values taking precedence.  Logs
go to stderr; stdout stays silent unless --print is given.  Identical
command lines with identical seeds produce byte-identical output files.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

from . import cross_section as cs
from . import estimates as est
from . import families as fam
from . import flow as fl
from . import lorentz as lz
from . import serialize as ser
from . import sphere_spectral as sph
from .cross_section import CrossSection, GeometryReport
from .errors import LightconeError
from .sphere_spectral import ScalarField

DEFAULT_BANDLIMIT = 48
DEFAULT_SEED = 1


def _log(msg: str):
    print(msg, file=sys.stderr)


def _parse_vec3(text: str) -> np.ndarray:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected ax,ay,az")
    return np.array(parts)


def _parse_axis_angle(text: str):
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected ux,uy,uz,angle")
    axis = np.array(parts[:3])
    norm = np.linalg.norm(axis)
    if norm == 0:
        raise argparse.ArgumentTypeError("rotation axis must be nonzero")
    return axis / norm, parts[3]


def _axis_angle_rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    k = np.array(
        [[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]]
    )
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * (k @ k)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="lightcone",
        description="Spectral geometry of spacelike cross sections of the "
        "standard Minkowski lightcone.",
    )
    p.add_argument("--config", default=None, help="TOML file supplying flag defaults")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a cross-section file")
    g.add_argument("--kind", choices=["round", "boosted-round", "perturbed", "random"],
                   default=None)
    g.add_argument("--bandlimit", type=int, default=None)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--rho", type=float, default=None)
    g.add_argument("--boost", type=str, default=None, help="ax,ay,az")
    g.add_argument("--l", type=int, default=None)
    g.add_argument("--m", type=int, default=None)
    g.add_argument("--s", type=float, default=None)
    g.add_argument("--amplitude", type=float, default=None)
    g.add_argument("--gen-degree", type=int, default=None)
    g.add_argument("--allow-negative-h2", action="store_true")
    g.add_argument("--output", default=None)
    g.add_argument("--print", action="store_true", dest="print_out")

    a = sub.add_parser("analyze", help="geometry report for a section file")
    a.add_argument("--input", default=None)
    a.add_argument("--output", default=None)
    a.add_argument("--print", action="store_true", dest="print_out")

    b = sub.add_parser("boost", help="apply a Lorentz transform to a section")
    b.add_argument("--input", default=None)
    b.add_argument("--boost", type=str, default=None, help="ax,ay,az")
    b.add_argument("--rotate", type=str, default=None, help="ux,uy,uz,angle")
    b.add_argument("--output", default=None)
    b.add_argument("--print", action="store_true", dest="print_out")

    bl = sub.add_parser("balance", help="boost a section to zero first moments")
    bl.add_argument("--input", default=None)
    bl.add_argument("--output", default=None)
    bl.add_argument("--print", action="store_true", dest="print_out")

    f = sub.add_parser("flow", help="run null mean curvature flow")
    f.add_argument("--input", default=None)
    f.add_argument("--dt", type=float, default=None)
    f.add_argument("--t-max", type=float, default=None)
    f.add_argument("--normalized", action=argparse.BooleanOptionalAction, default=None)
    f.add_argument("--stop-tol", type=float, default=None,
                   help="stop normalized flow when ||Aring|| drops below this")
    f.add_argument("--max-steps", type=int, default=None)
    f.add_argument("--output", default=None, help="CSV time series")
    f.add_argument("--final", default=None, help="optional final section file")
    f.add_argument("--print", action="store_true", dest="print_out")

    v = sub.add_parser("verify", help="run a seeded verification suite")
    v.add_argument("--suite", choices=["identities", "inequalities", "equivariance", "all"],
                   default=None)
    v.add_argument("--n", type=int, default=None)
    v.add_argument("--seed", type=int, default=None)
    v.add_argument("--bandlimit", type=int, default=None)
    v.add_argument("--output", default=None)
    v.add_argument("--print", action="store_true", dest="print_out")

    o = sub.add_parser("optimality", help="second-variation scan of F_C")
    o.add_argument("--C", type=float, default=None)
    o.add_argument("--l", type=int, default=None)
    o.add_argument("--m", type=int, default=None)
    o.add_argument("--s-max", type=float, default=None)
    o.add_argument("--n", type=int, default=None)
    o.add_argument("--output", default=None)
    o.add_argument("--print", action="store_true", dest="print_out")

    c = sub.add_parser("compactness", help="convergent/divergent section sequences")
    c.add_argument("--mode", choices=["convergent", "divergent"], default=None)
    c.add_argument("--n", type=int, default=None)
    c.add_argument("--bandlimit", type=int, default=None)
    c.add_argument("--output", default=None)
    c.add_argument("--print", action="store_true", dest="print_out")
    return p


def _apply_config(args: argparse.Namespace):
    if not args.config:
        return
    with open(args.config, "rb") as fh:
        table = tomllib.load(fh)
    for key, value in table.items():
        dest = key.replace("-", "_")
        if getattr(args, dest, None) is None and hasattr(args, dest):
            setattr(args, dest, value)


def _default(args, name, value):
    if getattr(args, name, None) is None:
        setattr(args, name, value)


def _emit(args, obj):
    text = ser.render_json(obj) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    if getattr(args, "print_out", False):
        sys.stdout.write(text)


# ----------------------------------------------------------------------------
# generate / analyze / boost / balance / flow
# ----------------------------------------------------------------------------


def cmd_generate(args) -> int:
    _default(args, "kind", "random")
    _default(args, "bandlimit", DEFAULT_BANDLIMIT)
    _default(args, "seed", DEFAULT_SEED)
    _default(args, "rho", 1.0)
    L = args.bandlimit
    meta = {"kind": args.kind, "seed": args.seed, "bandlimit": L}
    if args.kind == "round":
        section = fam.round_section(L, args.rho)
        meta["rho"] = args.rho
    elif args.kind == "boosted-round":
        avec = _parse_vec3(args.boost or "0,0,0.6")
        section = fam.boosted_round(L, args.rho, avec)
        meta["rho"] = args.rho
        meta["boost"] = [float(x) for x in avec]
    elif args.kind == "perturbed":
        _default(args, "l", 2)
        _default(args, "m", 0)
        _default(args, "s", 0.05)
        section = fam.perturbed_section(L, args.rho, args.l, args.m, args.s)
        meta.update({"rho": args.rho, "l": args.l, "m": args.m, "s": args.s})
    else:
        _default(args, "amplitude", fam.DEFAULT_AMPLITUDE)
        _default(args, "gen_degree", fam.DEFAULT_GEN_DEGREE)
        section = fam.random_section(
            L,
            args.seed,
            amplitude=args.amplitude,
            gen_degree=args.gen_degree,
            nonneg_h2=not args.allow_negative_h2,
        )
        meta.update({"amplitude": args.amplitude, "gen_degree": args.gen_degree})
    obj = ser.section_to_obj(section, meta)
    _emit(args, obj)
    _log(f"generated {args.kind} section at bandlimit {L}")
    return 0


def geometry_report(section: CrossSection) -> GeometryReport:
    h2 = cs.spacetime_mean_curvature(section)
    gap = est.tracefree_gap(section)
    z = lz.z_vector(section)
    ref = lz.stcmc_from_z(z, section.bandlimit)
    return GeometryReport(
        area=cs.area(section),
        area_radius=cs.area_radius(section),
        min_h2=float(h2.values.min()),
        max_h2=float(h2.values.max()),
        int_h2=cs.integrate_on_surface(section, h2),
        norm_a_tracefree=cs.norm_tracefree_A(section),
        gap_lhs=gap.lhs,
        gap_rhs=gap.rhs,
        z_vector=tuple(z.components),
        kappa=lz.kappa_bound(section),
        codazzi_residual=cs.codazzi_residual(section),
        w22_to_reference=cs.w22_distance(section.omega, ref.omega),
    )


def cmd_analyze(args) -> int:
    section = ser.load_section(args.input)
    report = geometry_report(section)
    _emit(args, ser.report_to_obj(report))
    _log(f"analyzed {args.input}: area {report.area:.6g}, kappa {report.kappa:.3e}")
    return 0


def _transform_from_args(args) -> lz.LorentzMatrix:
    lam = lz.LorentzMatrix.identity()
    if getattr(args, "rotate", None):
        axis, angle = _parse_axis_angle(args.rotate)
        lam = lz.LorentzMatrix.from_rotation(_axis_angle_rotation(axis, angle))
    if getattr(args, "boost", None):
        lam = lz.boost_toward(_parse_vec3(args.boost)) @ lam  # rotate, then boost
    return lam


def cmd_boost(args) -> int:
    section = ser.load_section(args.input)
    lam = _transform_from_args(args)
    image = lz.apply_to_section(lam, section)
    meta = {
        "source": str(args.input),
        "transform": ser.lorentz_to_obj(lam.matrix),
        "reanalysis_residual": image.reanalysis_residual,
    }
    _emit(args, ser.section_to_obj(image, meta))
    _log(f"applied transform; re-analysis residual {image.reanalysis_residual:.3e}")
    return 0


def cmd_balance(args) -> int:
    section = ser.load_section(args.input)
    balanced, lam = lz.balance(section)
    meta = {
        "source": str(args.input),
        "transform": ser.lorentz_to_obj(lam.matrix),
        "first_moment_residual": lz.first_moment_residual(balanced),
    }
    _emit(args, ser.section_to_obj(balanced, meta))
    _log(f"balanced; residual {meta['first_moment_residual']:.3e}")
    return 0


def cmd_flow(args) -> int:
    section = ser.load_section(args.input)
    _default(args, "dt", 1e-3)
    _default(args, "t_max", 0.25)
    _default(args, "normalized", False)
    _default(args, "stop_tol", 0.0)
    _default(args, "max_steps", 100_000)
    config = fl.FlowConfig(
        dt_initial=args.dt,
        t_max=args.t_max,
        normalized=args.normalized,
        stop_tracefree_tol=args.stop_tol,
        max_steps=args.max_steps,
    )
    result = fl.run(section, config)
    if args.output:
        ser.write_flow_csv(args.output, result.states)
    if args.final:
        ser.save_section(
            args.final,
            result.final.section,
            {"t": result.final.t, "termination": result.termination},
        )
    if args.print_out:
        sys.stdout.write(ser.render_json({"termination": result.termination,
                                          "t_final": result.final.t,
                                          "steps": len(result.states) - 1}) + "\n")
    _log(f"flow {result.termination} at t = {result.final.t:.6g} "
         f"({len(result.states) - 1} steps)")
    return 0


# ----------------------------------------------------------------------------
# verify suites
# ----------------------------------------------------------------------------


def _residual_report(name, residual, tol, min_h2=0.0):
    return {
        "check": name,
        "lhs": float(residual),
        "rhs": float(tol),
        "ratio": float(residual / tol),
        "min_h2": float(min_h2),
        "is_stcmc": False,
        "passed": bool(residual <= tol),
        "flagged": False,
    }


def _ineq_report(name, rep: est.InequalityReport):
    return {
        "check": name,
        "lhs": rep.lhs,
        "rhs": rep.rhs,
        "ratio": rep.ratio,
        "min_h2": rep.min_h2,
        "is_stcmc": rep.is_stcmc,
        "passed": rep.passed,
        "flagged": rep.flagged,
    }


def identity_reports(section: CrossSection) -> list:
    og = section.ogrid
    h2 = cs.spacetime_mean_curvature(section)
    min_h2 = float(h2.values.min())
    out = []
    gb = abs(cs.integrate_on_surface(section, h2) / (16 * np.pi) - 1.0)
    out.append(_residual_report("gauss_bonnet_rel", gb, 1e-8, min_h2))
    h2u = cs.spacetime_mean_curvature_from_log(section)
    out.append(
        _residual_report(
            "h2_u_vs_v_form", np.abs(h2u.values - h2.values).max(), 1e-8, min_h2
        )
    )
    thetabar, theta = cs.null_expansions(section)
    out.append(
        _residual_report(
            "theta_product",
            np.abs(thetabar.values * theta.values - h2.values).max(),
            1e-10,
            min_h2,
        )
    )
    out.append(
        _residual_report(
            "theta_direct",
            np.abs(theta.values - cs.theta_direct(section).values).max(),
            1e-7,
            min_h2,
        )
    )
    out.append(
        _residual_report(
            "second_ff_contraction",
            np.abs(cs.second_ff_contraction(section).values - h2.values / 2).max(),
            1e-9,
            min_h2,
        )
    )
    out.append(
        _residual_report("codazzi", cs.codazzi_residual(section), 1e-6, min_h2)
    )
    gap = est.tracefree_gap(section)  # internally cross-checks both routes
    out.append(_ineq_report("tracefree_gap_consistency", gap))
    chain = est.bochner_chain(section)
    out.append(
        _residual_report(
            "bochner_equality_link",
            abs(chain.sq_deviation - chain.pairing) / max(chain.sq_deviation, 1e-300),
            1e-6,
            min_h2,
        )
    )
    out.append(
        _residual_report(
            "bochner_identity_link",
            abs(chain.hess_tf_sq_direct - chain.hess_tf_sq_formula)
            / max(abs(chain.hess_tf_sq_direct), 1e-300),
            1e-6,
            min_h2,
        )
    )
    out.append(
        _residual_report("poisson_residual", chain.poisson_residual, 1e-7, min_h2)
    )
    return out


def inequality_reports(section: CrossSection) -> list:
    out = [
        _ineq_report("tracefree_gap", est.tracefree_gap(section)),
        _ineq_report("almost_schur", est.almost_schur(section)),
    ]
    h2 = cs.spacetime_mean_curvature(section)
    if h2.values.min() >= 0:
        measure = ScalarField(section.ogrid, section.omega_values**2)
        out.append(_ineq_report("hoelder_h2", est.hoelder_lemma(h2, measure)))
    q = fl.monotone_quantity(section)
    out.append(
        _ineq_report(
            "q_bound",
            est.InequalityReport.build(
                q, 128 * np.pi**2, float(h2.values.min()), False
            ),
        )
    )
    r = cs.area_radius(section)
    rz = lz.z_vector(section).lorentz_radius()
    out.append(
        _ineq_report(
            "rz_ge_r",
            est.InequalityReport.build(r * (1 - 1e-10), rz, float(h2.values.min()), False),
        )
    )
    return out


def sharpness_witnesses(bandlimit: int) -> list:
    """High-degree small-amplitude members approaching gap ratio 1."""
    out = []
    for l in (8, 10, 12):
        section = fam.perturbed_section(bandlimit, 1.0, l, 0, 1e-3)
        out.append(_ineq_report(f"tracefree_gap_witness_l{l}", est.tracefree_gap(section)))
    return out


def equivariance_reports(section: CrossSection, rng: np.random.Generator) -> list:
    out = []
    z0 = lz.z_vector(section)
    area0 = cs.area(section)
    k0 = cs.gauss_curvature(section)
    kdist0 = np.sqrt(
        cs.integrate_on_surface(
            section, ScalarField(section.ogrid, (k0.values - 1.0) ** 2)
        )
    )
    kappa0 = lz.kappa_bound(section)
    for mag in (0.2, 0.6, 1.0):
        direction = rng.standard_normal(3)
        direction /= np.linalg.norm(direction)
        lam = lz.boost_toward(mag * direction)
        image = lz.apply_to_section(lam, section)
        z_err = np.abs(
            lz.z_vector(image).components - (lam @ z0).components
        ).max()
        out.append(_residual_report(f"z_equivariance_a{mag}", z_err, 1e-7))
        area_err = abs(cs.area(image) / area0 - 1.0)
        out.append(_residual_report(f"area_invariance_a{mag}", area_err, 1e-8))
        ki = cs.gauss_curvature(image)
        kdist = np.sqrt(
            cs.integrate_on_surface(
                image, ScalarField(image.ogrid, (ki.values - 1.0) ** 2)
            )
        )
        out.append(
            _residual_report(
                f"k_l2_invariance_a{mag}",
                abs(kdist - kdist0) / max(kdist0, 1e-300),
                1e-6,
            )
        )
        out.append(
            _residual_report(
                f"kappa_invariance_a{mag}",
                abs(lz.kappa_bound(image) - kappa0),
                1e-6,
            )
        )
    return out


def run_suite(suite: str, n: int, seed: int, bandlimit: int):
    rng = np.random.default_rng(seed)
    reports = []
    for index in range(n):
        section = fam.random_section(bandlimit, rng)
        if suite in ("identities", "all"):
            reports.extend(identity_reports(section))
        if suite in ("inequalities", "all"):
            reports.extend(inequality_reports(section))
        if suite in ("equivariance", "all"):
            reports.extend(equivariance_reports(section, rng))
    if suite in ("inequalities", "all"):
        reports.extend(sharpness_witnesses(bandlimit))
    n_fail = sum(1 for r in reports if not r["passed"] and not r["flagged"])
    summary = {
        "n_pass": sum(1 for r in reports if r["passed"]),
        "n_fail": n_fail,
        "max_ratio": max((r["ratio"] for r in reports), default=0.0),
        "seed": seed,
    }
    return summary, reports


def cmd_verify(args) -> int:
    _default(args, "suite", "all")
    _default(args, "n", 10)
    _default(args, "seed", DEFAULT_SEED)
    _default(args, "bandlimit", DEFAULT_BANDLIMIT)
    summary, reports = run_suite(args.suite, args.n, args.seed, args.bandlimit)
    _emit(args, {"summary": summary, "reports": reports})
    _log(
        f"suite {args.suite}: {summary['n_pass']} passed, {summary['n_fail']} "
        f"failed, max ratio {summary['max_ratio']:.6g}"
    )
    return 0 if summary["n_fail"] == 0 else 1


# ----------------------------------------------------------------------------
# optimality / compactness
# ----------------------------------------------------------------------------


def cmd_optimality(args) -> int:
    _default(args, "C", 2.0)
    _default(args, "l", 2)
    _default(args, "m", 0)
    _default(args, "s_max", 1e-2)
    _default(args, "n", 5)
    scan = est.optimality_scan(args.C, args.l, args.m, args.s_max, args.n)
    _emit(
        args,
        {
            "C": scan.C,
            "degree": scan.degree,
            "order": scan.order,
            "s_values": list(scan.s_values),
            "F_values": list(scan.F_values),
            "second_derivative_fd": scan.second_derivative_fd,
            "second_derivative_formula": scan.second_derivative_formula,
        },
    )
    _log(
        f"F_C'' fd {scan.second_derivative_fd:.6g} vs formula "
        f"{scan.second_derivative_formula:.6g}"
    )
    return 0


def cmd_compactness(args) -> int:
    _default(args, "mode", "convergent")
    _default(args, "n", 6)
    _default(args, "bandlimit", DEFAULT_BANDLIMIT)
    terms = []
    if args.mode == "convergent":
        sections, limit = fam.compactness_convergent(args.bandlimit, args.n)
        limit_z = lz.z_vector(limit)
        limit_unit = lz.stcmc_from_z(
            lz.FourVector(limit_z.components / limit_z.lorentz_radius()),
            args.bandlimit,
        )
        for k, section in enumerate(sections):
            z = lz.z_vector(section)
            rz = z.lorentz_radius()
            r = cs.area_radius(section)
            dist = cs.w22_distance((1.0 / r) * section.omega, limit_unit.omega)
            zs = z.spatial
            terms.append(
                {
                    "k": k,
                    "w22_to_limit": dist,
                    "z_normalized": list(z.components / rz),
                    "delta_timelike_margin": float(
                        z.time**2 / max(zs @ zs, 1e-300) - 1.0
                    ),
                    "norm_a_tracefree": cs.norm_tracefree_A(section),
                }
            )
    else:
        sections = fam.compactness_divergent(args.bandlimit, args.n)
        prev = None
        for k, section in enumerate(sections, start=1):
            entry = {
                "k": k,
                "kappa": lz.kappa_bound(section),
                "norm_a_tracefree": cs.norm_tracefree_A(section),
                "area_radius": cs.area_radius(section),
            }
            if prev is not None:
                entry["sup_distance_to_previous"] = float(
                    np.abs(section.omega_values - prev.omega_values).max()
                )
            terms.append(entry)
            prev = section
    _emit(args, {"mode": args.mode, "n": args.n, "terms": terms})
    _log(f"compactness {args.mode}: {len(terms)} terms")
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "analyze": cmd_analyze,
    "boost": cmd_boost,
    "balance": cmd_balance,
    "flow": cmd_flow,
    "verify": cmd_verify,
    "optimality": cmd_optimality,
    "compactness": cmd_compactness,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return COMMANDS[args.command](args)
    except LightconeError as exc:
        _log(f"error: {exc}")
        return 2
    except OSError as exc:
        _log(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
