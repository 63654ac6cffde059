"""``hitchin-lab`` command line entry point.

Exit status: 0 on success, 1 on domain errors (a JSON object
``{"error": code, "detail": ...}`` is written to stderr), 2 on usage errors.
Randomized subcommands take ``--seed`` (default 0).
"""

import argparse
import csv
import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dynamics, lax_reduction, schottky, special_functions
from ._parallel import parallel_map
from .errors import HitchinLabError, InvalidConfig
from .phase_space import PhasePoint

FN_CHOICES = ("theta1", "theta-paper", "wp", "wp-deriv", "e2")
KINDS = ("random", "rank1-spin", "spinless")


@dataclass
class RunConfig:
    subcommand: str
    flags: dict
    inputs: list = field(default_factory=list)
    output: str = None
    seed: int = 0

    @classmethod
    def from_args(cls, args):
        flags = {k: v for k, v in vars(args).items() if k not in ("handler", "run")}
        inputs = [flags[k] for k in ("phase", "loop", "config") if flags.get(k)]
        return cls(
            subcommand=" ".join(filter(None, [args.command, flags.get("action")])),
            flags=flags,
            inputs=inputs,
            output=flags.get("out"),
            seed=int(flags.get("seed") or 0),
        )


# --- formatting helpers ---------------------------------------------------


def parse_complex(text):
    """Parse ``a+bi`` style input (``i`` or ``j`` as imaginary unit)."""
    s = str(text).strip().replace(" ", "").replace("i", "j").replace("I", "j")
    s = re.sub(r"(^|[+-])j", r"\g<1>1j", s)
    try:
        return complex(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}")


def fmt_real(x):
    return f"{float(x):.17g}"


def fmt_complex(z):
    z = complex(z)
    return f"{fmt_real(z.real)} {fmt_real(z.imag)}"


def _pair(z):
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _dump(obj):
    return json.dumps(obj, indent=None, sort_keys=False)


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path} is not valid JSON: {exc}")


def write_text(path, text):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc.strerror}")


class IOFailure(HitchinLabError):
    code = "io_error"


def load_phase(path):
    return PhasePoint.from_json(read_json(path))


# --- fixtures -------------------------------------------------------------


def generate_phase(N, kind="random", seed=0):
    """Deterministic test phase point.

    Positions are spread along the real period with small complex jitter so
    they stay well separated; ``rank1-spin`` builds ``p = a b^T`` with the
    diagonal removed, ``spinless`` sets ``p = 0``.
    """
    if N < 2:
        raise InvalidConfig("N must be at least 2")
    if kind not in KINDS:
        raise InvalidConfig(f"unknown kind {kind!r}")
    rng = np.random.default_rng(seed)
    u = np.arange(N) / N + 0.05 * rng.uniform(-1, 1, N) + 0.05j * rng.uniform(-1, 1, N)
    w = 0.5 * rng.normal(size=N) + 0.1j * rng.normal(size=N)
    if kind == "spinless":
        p = np.zeros((N, N), dtype=complex)
    elif kind == "rank1-spin":
        a = rng.normal(size=N) + 1j * rng.normal(size=N)
        b = rng.normal(size=N) + 1j * rng.normal(size=N)
        p = 0.5 * np.outer(a, b)
    else:
        p = 0.5 * (rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N)))
    return PhasePoint(u, w, p)


# --- subcommands ----------------------------------------------------------


def cmd_specialfn(args, out):
    m = special_functions.ModularParameter(args.tau)
    z = args.zeta
    if args.fn == "theta1":
        val = special_functions.theta1_deriv(z, m, args.order) if args.order else special_functions.theta1(z, m)
    elif args.fn == "theta-paper":
        val = special_functions.theta_paper(z, m)
    elif args.fn == "wp":
        val = special_functions.wp(z, m)
    elif args.fn == "wp-deriv":
        val = special_functions.wp_deriv(z, m)
    else:
        val = special_functions.eisenstein_e2(m)
    print(fmt_complex(val), file=out)


def _load_group(data):
    if "tau" in data:
        return schottky.genus1(complex(*data["tau"]))
    try:
        gens = [schottky.MoebiusMap(*(complex(*e) for e in g)) for g in data["generators"]]
        circles = [
            tuple(
                schottky.Circle(complex(*c["center"]), float(c["radius"]), bool(c.get("exterior", False)))
                for c in pair
            )
            for pair in data["circles"]
        ]
        genus = int(data.get("genus", len(gens)))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidConfig(f"malformed Schottky description: {exc!r}")
    return schottky.SchottkyGroup(genus, gens, circles)


def cmd_schottky(args, out):
    if args.action == "check":
        grp = _load_group(read_json(args.config))
        print(_dump({"valid": True, "genus": grp.genus}), file=out)
        return
    formula = schottky.moduli_dimension_formula(args.N, args.g)
    if not args.numeric:
        print(formula, file=out)
        return
    numeric = schottky.moduli_dimension_numeric(args.N, args.g, args.trials, args.seed)
    print(f"formula {formula}", file=out)
    print(f"numeric {numeric}", file=out)


def cmd_phase(args, out):
    if args.action == "generate":
        point = generate_phase(args.N, args.kind, args.seed)
        text = _dump(point.to_json()) + "\n"
        if args.out:
            write_text(args.out, text)
        else:
            out.write(text)
        return
    point = load_phase(args.phase)
    print(_dump({"valid": True, "N": point.N, "discarded_diagonal": [_pair(z) for z in point.discarded_diagonal]}), file=out)


def parse_grid(spec):
    """``x0:x1:nx,y0:y1:ny`` (rectangle, endpoints included) or ``z1;z2;...``."""
    if ":" in spec:
        try:
            xs, ys = spec.split(",")
            x0, x1, nx = xs.split(":")
            y0, y1, ny = ys.split(":")
            re_vals = np.linspace(float(x0), float(x1), int(nx))
            im_vals = np.linspace(float(y0), float(y1), int(ny))
        except ValueError:
            raise InvalidConfig(f"bad grid spec {spec!r}")
        return [complex(a, b) for b in im_vals for a in re_vals]
    return [parse_complex(tok) for tok in spec.split(";") if tok.strip()]


def _parse_nu(spec):
    if not spec:
        return None
    nu = {}
    for tok in spec.split(","):
        try:
            power, coeff = tok.split(":")
            nu[int(power)] = parse_complex(coeff)
        except ValueError:
            raise InvalidConfig(f"bad weight term {tok!r}; expected power:coefficient")
    return nu


def cmd_lax(args, out):
    m = special_functions.ModularParameter(args.tau)
    if args.action == "plemelj":
        loop = lax_reduction.LoopField.from_json(read_json(args.loop))
        inside, outside = lax_reduction.plemelj_split(loop)
        stem = Path(args.loop)
        in_path = args.out_inside or str(stem.with_suffix(".inside.json"))
        out_path = args.out_outside or str(stem.with_suffix(".outside.json"))
        write_text(in_path, _dump(inside.to_json()) + "\n")
        write_text(out_path, _dump(outside.to_json()) + "\n")
        print(in_path, file=out)
        print(out_path, file=out)
        return

    x = load_phase(args.phase)
    if args.action == "eval":
        mat = lax_reduction.lax_matrix(x, args.zeta, m).matrix
        print(_dump([[_pair(v) for v in row] for row in mat]), file=out)
    elif args.action == "invariants":
        js = [int(j) for j in args.j.split(",")]
        grid = parse_grid(args.grid)

        def row(z):
            eta = lax_reduction.lax_matrix(x, z, m).matrix
            return [np.trace(np.linalg.matrix_power(eta, j)) for j in js]

        values = parallel_map(row, grid)
        writer = csv.writer(out, lineterminator="\n")
        header = ["zeta_re", "zeta_im"]
        for j in js:
            header += [f"j{j}_re", f"j{j}_im"]
        writer.writerow(header)
        for z, vals in zip(grid, values):
            cells = [fmt_real(z.real), fmt_real(z.imag)]
            for v in vals:
                cells += [fmt_real(v.real), fmt_real(v.imag)]
            writer.writerow(cells)
    elif args.action == "hitchin":
        val = lax_reduction.hitchin_integral(
            x, args.j, m, nu=_parse_nu(args.nu), contour_im=args.contour_im, M=args.M
        )
        print(fmt_complex(val), file=out)
    elif args.action == "moment-check":
        rng = np.random.default_rng(args.seed)
        zetas = rng.uniform(-0.5, 0.5, args.samples) + 1j * m.tau.imag * rng.uniform(0.05, 0.95, args.samples)
        res = parallel_map(lambda z: lax_reduction.moment_residual(x, z, m), zetas)
        print(fmt_real(max(res)), file=out)
    elif args.action == "fourier":
        loop = lax_reduction.solve_moment_fourier(x.u, x.p, args.K, m, x.w)
        text = _dump(loop.to_json()) + "\n"
        if args.out:
            write_text(args.out, text)
        else:
            out.write(text)


def cmd_evolve(args, out):
    m = special_functions.ModularParameter(args.tau)
    x = load_phase(args.phase)
    cfg = dynamics.FlowConfig(args.dt, args.steps, args.integrator.replace("-", "_"), args.record_every)
    zetas = [parse_complex(z) for z in args.zetas.split(",") if z.strip()]
    traj = dynamics.integrate(x, cfg, m)
    report = dynamics.conservation_report(traj, zetas, args.jmax, m)

    header = []
    for name in report.columns:
        header += [name] if name == "t" else [f"{name}_re", f"{name}_im"]
    lines = [",".join(header)]
    for row in report.rows:
        cells = [fmt_real(row[0])]
        for v in row[1:]:
            cells += [fmt_real(complex(v).real), fmt_real(complex(v).imag)]
        lines.append(",".join(cells))
    write_text(args.out, "\n".join(lines) + "\n")

    sidecar = Path(args.out).with_suffix(".drifts.json")
    summary = {
        "dt": cfg.dt,
        "steps": cfg.steps,
        "integrator": cfg.integrator,
        "tau": _pair(m.tau),
        "zetas": [_pair(z) for z in zetas],
        "drifts": report.drifts,
        "run": {"subcommand": args.run.subcommand, "inputs": args.run.inputs, "seed": args.run.seed},
    }
    write_text(sidecar, json.dumps(summary, indent=2) + "\n")
    print(str(sidecar), file=out)


# --- parser ---------------------------------------------------------------


def build_parser():
    cplx = parse_complex
    parser = argparse.ArgumentParser(prog="hitchin-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("specialfn", help="theta, Weierstrass and Eisenstein evaluation")
    sps = sp.add_subparsers(dest="action", required=True)
    ev = sps.add_parser("eval")
    ev.add_argument("--fn", choices=FN_CHOICES, required=True)
    ev.add_argument("--zeta", type=cplx, default=0j)
    ev.add_argument("--tau", type=cplx, required=True)
    ev.add_argument("--order", type=int, choices=(1, 2, 3))
    sp.set_defaults(handler=cmd_specialfn)

    sk = sub.add_parser("schottky", help="Schottky groups and moduli dimension")
    sks = sk.add_subparsers(dest="action", required=True)
    chk = sks.add_parser("check")
    chk.add_argument("--config", required=True)
    dim = sks.add_parser("dim")
    dim.add_argument("--N", type=int, required=True)
    dim.add_argument("--g", type=int, required=True)
    dim.add_argument("--numeric", action="store_true")
    dim.add_argument("--trials", type=int, default=5)
    dim.add_argument("--seed", type=int, default=0)
    sk.set_defaults(handler=cmd_schottky)

    ph = sub.add_parser("phase", help="phase-point files")
    phs = ph.add_subparsers(dest="action", required=True)
    gen = phs.add_parser("generate")
    gen.add_argument("--N", type=int, required=True)
    gen.add_argument("--kind", choices=KINDS, default="random")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out")
    val = phs.add_parser("validate")
    val.add_argument("--phase", required=True)
    ph.set_defaults(handler=cmd_phase)

    lx = sub.add_parser("lax", help="Lax matrix, invariants and moment checks")
    lxs = lx.add_subparsers(dest="action", required=True)

    def with_phase(p):
        p.add_argument("--phase", required=True)
        p.add_argument("--tau", type=cplx, default=1j)
        return p

    le = with_phase(lxs.add_parser("eval"))
    le.add_argument("--zeta", type=cplx, required=True)
    li = with_phase(lxs.add_parser("invariants"))
    li.add_argument("--j", default="1,2,3")
    li.add_argument("--grid", required=True)
    lh = with_phase(lxs.add_parser("hitchin"))
    lh.add_argument("--j", type=int, default=2)
    lh.add_argument("--M", type=int, default=128)
    lh.add_argument("--contour-im", type=float, default=None)
    lh.add_argument("--nu", default=None, help="Laurent weight, e.g. '0:1,1:0.5+0.1i'")
    lm = with_phase(lxs.add_parser("moment-check"))
    lm.add_argument("--samples", type=int, default=100)
    lm.add_argument("--seed", type=int, default=0)
    lf = with_phase(lxs.add_parser("fourier"))
    lf.add_argument("--K", type=int, default=32)
    lf.add_argument("--out")
    lp = lxs.add_parser("plemelj")
    lp.add_argument("--loop", required=True)
    lp.add_argument("--tau", type=cplx, default=1j)
    lp.add_argument("--out-inside")
    lp.add_argument("--out-outside")
    lx.set_defaults(handler=cmd_lax)

    evo = sub.add_parser("evolve", help="integrate the Hamiltonian flow")
    evo.add_argument("--phase", required=True)
    evo.add_argument("--tau", type=cplx, default=1j)
    evo.add_argument("--dt", type=float, default=1e-3)
    evo.add_argument("--steps", type=int, default=1000)
    evo.add_argument("--integrator", choices=("rk4", "implicit_midpoint", "implicit-midpoint"), default="rk4")
    evo.add_argument("--record-every", type=int, default=1)
    evo.add_argument("--zetas", default="0.3+0.4i")
    evo.add_argument("--jmax", type=int, default=3)
    evo.add_argument("--out", required=True)
    evo.set_defaults(handler=cmd_evolve, action=None)
    return parser


def dispatch(argv=None, out=None, err=None):
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.run = RunConfig.from_args(args)
    try:
        args.handler(args, out)
    except HitchinLabError as exc:
        print(json.dumps({"error": exc.code, "detail": str(exc)}), file=err)
        return 1
    except argparse.ArgumentTypeError as exc:
        print(json.dumps({"error": "invalid_input", "detail": str(exc)}), file=err)
        return 1
    return 0


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()

