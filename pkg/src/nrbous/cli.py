"""Command-line driver: ``nrbous <command> [flags]``.

Exit codes: 0 all checks passed, 1 a check failed or a run aborted,
2 usage error, 3 I/O error, 4 domain error (invalid parameters).
"""
from __future__ import annotations

import argparse
import datetime as _dt
import sys

from . import experiments as ex
from .errors import DomainError, ResourceError
from .resonance import BandwidthSpec
from .snapshot import save_snapshot
from .solver import SimConfig
from .spectral import DomainParams

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_IO, EXIT_DOMAIN = 0, 1, 2, 3, 4


def _floats(text):
    return tuple(float(x) for x in str(text).split(",") if x.strip())


def _ints(text):
    return tuple(int(x) for x in str(text).split(",") if x.strip())


def _common(p):
    g = p.add_argument_group("common")
    g.add_argument("--config", help="key=value file; command-line flags override it")
    g.add_argument("--eta", type=float)
    g.add_argument("--l1", type=float)
    g.add_argument("--l2", type=float)
    g.add_argument("--cutoff", type=int, help="truncation K")
    g.add_argument("--c-delta", type=float)
    g.add_argument("--c-delta-star", type=float)
    g.add_argument("--zeta", type=float)
    g.add_argument("--nu1", type=float)
    g.add_argument("--nu2", type=float)
    g.add_argument("--big-n", type=float, help="stratification frequency N")
    g.add_argument("--dt", type=float)
    g.add_argument("--t-final", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", help="CSV output path (default: stdout)")
    g.add_argument("--no-timestamp", action="store_true", help="omit the generated-at header line")
    g.add_argument("--quiet", action="store_true", help="do not print check lines")


def build_parser():
    parser = argparse.ArgumentParser(prog="nrbous", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="FFF and mixed lattice counts with fitted exponents")
    _common(p)
    p.add_argument("--kind", choices=("fff", "mixed", "both"), default="both")
    p.add_argument("--n-ladder", type=_ints, help="FFF |n| ladder along the first axis")
    p.add_argument("--m-ladder", type=_floats, help="mixed M ladder")
    p.add_argument("--delta-star", type=float, help="mixed bandwidth for the M ladder")
    p.add_argument("--ds-ladder", type=_floats, help="mixed bandwidth ladder at fixed M")
    p.add_argument("--m-fixed", type=float)

    p = sub.add_parser("invariants", help="run the invariant suite")
    _common(p)
    p.add_argument("--fields", type=int, help="random fields per grid point")
    p.add_argument("--frame-cutoff", type=int)
    p.add_argument("--sign-cutoff", type=int)
    p.add_argument("--corrupt-frame", action="store_true", help="negative control: perturb the frames")

    p = sub.add_parser("coeff-scan", help="closed-form slow coefficients versus direct assembly")
    _common(p)
    p.add_argument("--triads", help="also write per-triad rows for a single domain to this path")

    p = sub.add_parser("simulate", help="integrate one system and emit diagnostics")
    _common(p)
    _sim_flags(p)
    p.add_argument("--system", choices=("restricted", "full"))
    p.add_argument("--snapshot", help="write the final modulated state as a JSON snapshot")

    p = sub.add_parser("compare-n", help="full versus restricted error over an N ladder")
    _common(p)
    _sim_flags(p)
    p.add_argument("--n-ladder", type=_floats)
    p.add_argument("--ell-prime", type=float)
    p.add_argument("--ablation", action="store_true", help="open all bandwidths to the cap")

    p = sub.add_parser("lower-bound", help="explicit mixed family versus its box estimate")
    _common(p)
    p.add_argument("--m-ladder", type=_floats)
    p.add_argument("--delta-star", type=float)
    return parser


def _sim_flags(p):
    p.add_argument("--amplitude", type=float)
    p.add_argument("--slope", type=float)
    p.add_argument("--weights", type=_floats)
    p.add_argument("--sample-every", type=int)
    p.add_argument("--phase-cfl", type=float)
    p.add_argument("--on-violation", choices=("warn", "reject"))


def _load_config(path, parser, command):
    """Parse a key=value file into defaults for the chosen subcommand."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    sub = _subparser(parser, command)
    actions = {a.dest: a for a in sub._actions}
    values = {}
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{no}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        dest = key.replace("-", "_")
        if dest not in actions or dest in ("config", "help"):
            raise DomainError(f"{path}:{no}: unknown key {key!r}")
        act = actions[dest]
        if act.nargs == 0:
            values[dest] = val.lower() in ("1", "true", "yes", "on")
        else:
            values[dest] = act.type(val) if act.type else val
            if act.choices and values[dest] not in act.choices:
                raise DomainError(f"{path}:{no}: {key} must be one of {act.choices}")
    return values


def _subparser(parser, command):
    for act in parser._actions:
        if isinstance(act, argparse._SubParsersAction):
            return act.choices[command]
    raise DomainError(f"no subcommand {command!r}")  # pragma: no cover


def _pick(args, name, default):
    v = getattr(args, name, None)
    return default if v is None else v


def _dom(args, eta_default=2.5):
    return DomainParams(_pick(args, "eta", eta_default), _pick(args, "l1", 1.0), _pick(args, "l2", 1.0))


def _bw(args):
    return BandwidthSpec(_pick(args, "c_delta", 1.0), _pick(args, "c_delta_star", 1.0), _pick(args, "zeta", 1.2))


def _grid(args):
    etas = (args.eta,) if args.eta is not None else ex.DEFAULT_ETAS
    if args.l1 is not None or args.l2 is not None:
        lengths = ((_pick(args, "l1", 1.0), _pick(args, "l2", 1.0)),)
    else:
        lengths = ex.DEFAULT_LENGTHS
    for eta in etas:
        DomainParams(eta)
    return etas, lengths


def _sim_config(args, **defaults):
    d = dict(K=8, N=10.0, dt=1e-3, T=0.1, seed=0, amplitude=1.0, slope=2.0, nu1=0.0, nu2=0.0)
    d.update(defaults)
    return SimConfig(
        dom=_dom(args),
        nu1=_pick(args, "nu1", d["nu1"]),
        nu2=_pick(args, "nu2", d["nu2"]),
        N=_pick(args, "big_n", d["N"]),
        K=_pick(args, "cutoff", d["K"]),
        dt=_pick(args, "dt", d["dt"]),
        T=_pick(args, "t_final", d["T"]),
        bw=_bw(args),
        seed=_pick(args, "seed", d["seed"]),
        spectrum_slope=_pick(args, "slope", d["slope"]),
        amplitude=_pick(args, "amplitude", d["amplitude"]),
        weights=tuple(_pick(args, "weights", (1.0, 1.0, 1.0))),
        phase_cfl=_pick(args, "phase_cfl", 0.5),
        on_violation=_pick(args, "on_violation", "warn"),
        sample_every=_pick(args, "sample_every", 1),
        ell_prime=_pick(args, "ell_prime", 1.0),
    )


def _params(args):
    skip = {"command", "config", "out", "no_timestamp", "quiet"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None and v is not False}


def _dispatch(args):
    cmd = args.command
    kind = {"count": "count-fff", "compare-n": "compare-N"}.get(cmd, cmd)
    grid = {}
    if cmd == "count":
        dom, bw = _dom(args), _bw(args)
        results = []
        if args.kind in ("fff", "both"):
            nl = _pick(args, "n_ladder", (16, 32, 64))
            grid["n_ladder"] = nl
            results.append(ex.count_fff_experiment(dom, bw, nl))
        if args.kind in ("mixed", "both"):
            ml = _pick(args, "m_ladder", (32.0, 64.0, 128.0))
            dl = _pick(args, "ds_ladder", (0.0125, 0.025, 0.05, 0.1, 0.2))
            grid["m_ladder"], grid["ds_ladder"] = ml, dl
            results.append(ex.count_mixed_experiment(dom, ml, _pick(args, "delta_star", 0.05), dl,
                                                     _pick(args, "m_fixed", 128.0)))
        res = ex.ExperimentResult(ex.COUNT_COLUMNS, [r for x in results for r in x.rows],
                                  [h for x in results for h in x.header], [c for x in results for c in x.checks])
        if args.kind == "mixed":
            kind = "count-mixed"
    elif cmd == "invariants":
        etas, lengths = _grid(args)
        res = ex.invariants_experiment(etas, lengths, frame_K=_pick(args, "frame_cutoff", 16),
                                       op_K=_pick(args, "cutoff", 6), bw=_bw(args),
                                       nu=(_pick(args, "nu1", 0.01), _pick(args, "nu2", 0.03)),
                                       n_fields=_pick(args, "fields", 3), sign_K=_pick(args, "sign_cutoff", 8),
                                       corrupt_frame=args.corrupt_frame)
    elif cmd == "coeff-scan":
        etas, lengths = _grid(args)
        K = _pick(args, "cutoff", 10)
        res = ex.coeff_scan_experiment(K, etas, lengths)
        if args.triads:
            if len(etas) * len(lengths) != 1:
                raise DomainError("--triads needs a single domain (give --eta, --l1, --l2)")
            from .coefficients import write_coefficient_scan

            write_coefficient_scan(args.triads, K, DomainParams(etas[0], *lengths[0]))
    elif cmd == "simulate":
        cfg = _sim_config(args, K=6)
        system = _pick(args, "system", "restricted")
        res = ex.simulate_experiment(cfg, system)
        if args.snapshot:
            from .solver import run

            final = run(cfg, system).state
            save_snapshot(final.u_mod, args.snapshot)
    elif cmd == "compare-n":
        cfg = _sim_config(args, K=8, T=0.5, nu1=0.01, nu2=0.02, N=25.0)
        if args.ablation:
            cfg = cfg.with_(bw=BandwidthSpec(1e9, 1e9, cfg.bw.zeta))
        ladder = _pick(args, "n_ladder", (25.0, 50.0, 100.0, 200.0, 400.0))
        grid["N_ladder"] = ladder
        res = ex.compare_n_experiment(cfg, ladder)
    elif cmd == "lower-bound":
        ml = _pick(args, "m_ladder", (64.0, 128.0))
        grid["M_ladder"] = ml
        res = ex.lower_bound_experiment(_dom(args, 2.0), ml, _pick(args, "delta_star", 0.1))
    else:  # pragma: no cover - argparse restricts the choices
        raise DomainError(f"unknown command {cmd}")
    spec = ex.ExperimentSpec(kind, params=_params(args), grid=grid, out=args.out)
    return spec, res


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.config:
            values = _load_config(args.config, parser, args.command)
            _subparser(parser, args.command).set_defaults(**values)
            args = parser.parse_args(argv)
        spec, res = _dispatch(args)
        stamp = None if args.no_timestamp else _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        text = ex.format_csv(spec, res, stamp)
        if args.out:
            with open(args.out, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"nrbous: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ResourceError as exc:
        print(f"nrbous: resource limit: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except DomainError as exc:
        print(f"nrbous: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    if not args.quiet:
        for c in res.checks:
            print(c.line(), file=sys.stderr)
    return EXIT_OK if res.passed else EXIT_CHECK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
