"""Command-line entry point.

Outputs are JSON on stdout (or ``--out``).  Identical arguments give
byte-identical output; wall-clock metadata only goes to ``--metadata``.
Exit codes: 0 success, 1 verification failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import platform
import sys
import time

import numpy as np

from . import __version__, dualops, sampling, verify
from .measures import Measure, MeasureError, ewens, measure_from_json, relative_entropy, total_variation, uniform
from .permcore import GroupError, Permutation, build_local_base, builtin_group, group_from_spec
from .slices import MultinomialCarrier
from .transport import TransportError, t2_hat, t2_paren, t2_tilde, w1


class UsageError(Exception):
    pass


# -- argument groups --------------------------------------------------------------

def _add_group_args(p, required: bool = True):
    p.add_argument("--group", required=required,
                   help="builtin name (Sn, An, product) or a JSON spec file")
    p.add_argument("--n", type=int, help="degree for Sn / An")
    p.add_argument("--blocks", help="comma separated blocks for product groups, e.g. 2,3 or 2,a4")
    p.add_argument("--ell", type=int, help="locality used for the base (defaults to the group's)")


def _add_measure_args(p):
    p.add_argument("--measure", default="uniform", help="uniform, ewens or a JSON weight file")
    p.add_argument("--theta", type=float, help="Ewens parameter")


def _add_common(p):
    p.add_argument("--seed", type=int, help="seed for stochastic commands")
    p.add_argument("--threads", type=int, default=1, help="worker cap")
    p.add_argument("--out", help="write the output here instead of stdout")
    p.add_argument("--metadata", help="write run metadata (version, timings) to this file")


def _add_carrier_args(p):
    p.add_argument("--parts", help="multinomial carrier parts, e.g. 2,2 for the slice X_{2,2}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="permconc", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    top = ap.add_subparsers(dest="command", required=True)

    grp = top.add_parser("group").add_subparsers(dest="action", required=True)
    for name in ("build", "inspect"):
        p = grp.add_parser(name)
        _add_group_args(p)
        _add_common(p)

    mea = top.add_parser("measure").add_subparsers(dest="action", required=True)
    for name in ("build", "entropy", "tv"):
        p = mea.add_parser(name)
        _add_group_args(p, required=False)
        _add_carrier_args(p)
        _add_measure_args(p)
        _add_common(p)
        if name != "build":
            p.add_argument("--nu", required=True, help="mu, dirac:<k>, random or a JSON weight file")
        if name == "tv":
            p.add_argument("--nu2", default="mu")

    tra = top.add_parser("transport").add_subparsers(dest="action", required=True)
    for name in ("w1", "t2tilde", "t2paren", "t2hat"):
        p = tra.add_parser(name)
        _add_group_args(p, required=False)
        _add_carrier_args(p)
        _add_measure_args(p)
        _add_common(p)
        p.add_argument("--nu1", default="mu")
        p.add_argument("--nu2", default="mu")
        p.add_argument("--metric", default="hamming")
        p.add_argument("--emit-coupling", action="store_true", help="include the dense coupling matrix")

    dua = top.add_parser("dual").add_subparsers(dest="action", required=True)
    p = dua.add_parser("eval")
    _add_group_args(p, required=False)
    _add_carrier_args(p)
    _add_common(p)
    p.add_argument("--kind", required=True, choices=sorted(dualops.InfConvSpec._needs))
    p.add_argument("--phi", required=True, help="random, distance:<k> or a JSON value file")
    p.add_argument("--t", type=float)
    p.add_argument("--c-ell", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--j", type=int)
    p.add_argument("--c", type=float)
    p.add_argument("--metric", default="hamming")
    p = dua.add_parser("talagrand-f")
    _add_group_args(p)
    _add_common(p)
    p.add_argument("--set", required=True, help="';'-separated elements: id, images like 2,1,3, or #ordinal")

    sam = top.add_parser("sample").add_subparsers(dest="action", required=True)
    p = sam.add_parser("draw")
    _add_group_args(p)
    _add_measure_args(p)
    _add_common(p)
    p.add_argument("--count", type=int, default=10)
    p = sam.add_parser("deviation")
    _add_group_args(p)
    _add_measure_args(p)
    _add_common(p)
    p.add_argument("--statistic", default="l_cycle_count",
                   choices=("l_cycle_count", "lipschitz_convex", "sup_linear_family"))
    p.add_argument("--l", type=int, default=2, help="cycle length for l_cycle_count")
    p.add_argument("--c-squared", type=float, help="override c(l)^2 (default: regime of the group)")
    p.add_argument("--samples", type=int, default=0, help="Monte Carlo draws beyond the enumeration cap")
    p.add_argument("--csv", help="also write the tail table as CSV")

    p = top.add_parser("verify")
    p.add_argument("inequality", choices=verify.VERIFIERS + ("canary", "all"))
    _add_group_args(p, required=False)
    _add_carrier_args(p)
    _add_measure_args(p)
    _add_common(p)
    p.add_argument("--metric", default="hamming")
    p.add_argument("--trials", type=int, default=verify.DEFAULT_TRIALS)
    p.add_argument("--c-override", type=float, help="replace c(l) in the W1 check (canary style)")
    p.add_argument("--summary", action="store_true", help="omit per-trial records")
    return ap


# -- spec resolution ----------------------------------------------------------------

def _load_json(path: str, what: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"{what}: cannot read {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what}: {path!r} is not valid JSON ({exc.msg})") from None


def _ints(text: str, what: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma separated integers, got {text!r}") from None


def resolve_group(args):
    if not args.group:
        return None
    name = args.group
    if name.lower().endswith(".json"):
        spec = _load_json(name, "--group")
        if not isinstance(spec, dict):
            raise UsageError("--group: spec must be a JSON object")
        G = group_from_spec(spec)
    else:
        blocks = args.blocks.split(",") if args.blocks else None
        G = builtin_group(name, args.n, blocks)
    return G


def resolve_base(args, G):
    ell = args.ell if getattr(args, "ell", None) else G.ell
    if ell is None:
        raise UsageError("--ell: the group has no recorded locality; pass --ell")
    return build_local_base(G, ell)


def resolve_carrier(args):
    """``(carrier, base or None)`` from the group or multinomial flags."""
    if getattr(args, "parts", None):
        if args.group:
            raise UsageError("--parts and --group are mutually exclusive")
        return MultinomialCarrier(tuple(_ints(args.parts, "--parts"))), None
    G = resolve_group(args)
    if G is None:
        raise UsageError("--group or --parts is required")
    return G, resolve_base(args, G)


def resolve_measure(args, carrier, T) -> Measure:
    kind = args.measure
    if kind == "uniform":
        base = T.fingerprint if T is not None else None
        return Measure(carrier, uniform(carrier).weights, base, "uniform")
    if kind == "ewens":
        if T is None:
            raise UsageError("--measure ewens needs a permutation group")
        if args.theta is None:
            raise UsageError("--theta is required for --measure ewens")
        return ewens(T, args.theta)
    mu = measure_from_json(carrier, _load_json(kind, "--measure"))
    return Measure(mu.carrier, mu.weights, None, kind)


def _rng(args, what: str) -> np.random.Generator:
    if args.seed is None:
        raise UsageError(f"{what} is stochastic; --seed is required")
    return np.random.default_rng(args.seed)


def resolve_nu(spec: str, args, carrier, mu: Measure, flag: str) -> Measure:
    if spec == "mu":
        return mu
    if spec.startswith("dirac:"):
        try:
            k = int(spec.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"{flag}: bad Dirac index in {spec!r}") from None
        if not 0 <= k < len(carrier):
            raise UsageError(f"{flag}: Dirac index {k} outside 0..{len(carrier) - 1}")
        return Measure.dirac(carrier, k)
    if spec == "random":
        _rng(args, flag + " random")
        # distinct flags draw distinct measures
        rng = np.random.default_rng([args.seed, sum(map(ord, flag))])
        return Measure(carrier, rng.dirichlet(np.ones(len(carrier))), label="dirichlet")
    return measure_from_json(carrier, _load_json(spec, flag))


def _element(G, token: str) -> int:
    token = token.strip()
    if token == "id":
        return G.identity_ordinal
    if token.startswith("#"):
        k = int(token[1:])
        if not 0 <= k < len(G):
            raise UsageError(f"--set: ordinal {k} outside the group")
        return k
    return G.ordinal(Permutation(tuple(_ints(token, "--set"))))


# -- commands ---------------------------------------------------------------------

def cmd_group(args):
    G = resolve_group(args)
    T = resolve_base(args, G)
    info = G.describe()
    info["base"] = T.describe()
    if args.action == "build":
        info["elements"] = G.labels()
        return info, 0
    lines = [f"group {G.name or 'custom'} on {G.n} points",
             f"|G|={len(G)}",
             f"K_n={G.k_n}",
             "orbits:"]
    lines += [f"  O_{j} = {{{', '.join(map(str, o))}}}" for j, o in G.orbits.items()]
    lines.append(f"{T.ell}-local base:")
    lines += [f"  t({k}) = {v}" for k, v in T.describe()["entries"].items()]
    lines.append(f"fingerprint {G.fingerprint}")
    return "\n".join(lines) + "\n", 0


def cmd_measure(args):
    carrier, T = resolve_carrier(args)
    mu = resolve_measure(args, carrier, T)
    if args.action == "build":
        return {"carrier": carrier.fingerprint, "labels": carrier.labels(), "measure": mu.to_json(),
                "label": mu.label}, 0
    nu = resolve_nu(args.nu, args, carrier, mu, "--nu")
    if args.action == "entropy":
        return {"relative_entropy": relative_entropy(nu, mu)}, 0
    nu2 = resolve_nu(args.nu2, args, carrier, mu, "--nu2")
    return {"total_variation": total_variation(nu, nu2), "convention": "l1"}, 0


def cmd_transport(args):
    carrier, T = resolve_carrier(args)
    mu = resolve_measure(args, carrier, T)
    nu1 = resolve_nu(args.nu1, args, carrier, mu, "--nu1")
    nu2 = resolve_nu(args.nu2, args, carrier, mu, "--nu2")
    if args.action == "w1":
        res = w1(nu1, nu2, args.metric)
    elif args.action == "t2tilde":
        res = t2_tilde(nu1, nu2, args.metric)
    elif args.action == "t2paren":
        res = t2_paren(nu1, nu2)
    else:
        res = t2_hat(nu1, nu2)
    return res.to_json(args.emit_coupling), 0


def cmd_dual(args):
    if args.action == "talagrand-f":
        G = resolve_group(args)
        A = sorted({_element(G, tok) for tok in args.set.split(";") if tok.strip()})
        f = dualops.talagrand_f_all(G, A)
        return {"set": A, "labels": G.labels(), "f": f.tolist()}, 0
    carrier, _ = resolve_carrier(args)
    if args.phi == "random":
        phi = _rng(args, "--phi random").normal(size=len(carrier))
    elif args.phi.startswith("distance:"):
        from .transport import distance_table
        k = _ints(args.phi.split(":", 1)[1], "--phi")[0]
        if not 0 <= k < len(carrier):
            raise UsageError(f"--phi: index {k} outside 0..{len(carrier) - 1}")
        phi = distance_table(carrier, args.metric)[k].astype(np.float64)
    else:
        phi = np.asarray(_load_json(args.phi, "--phi"), dtype=np.float64)
        if phi.shape != (len(carrier),):
            raise UsageError(f"--phi: expected {len(carrier)} values, got shape {phi.shape}")
    spec = dualops.InfConvSpec(args.kind, t=args.t, c_ell=args.c_ell, alpha=args.alpha, j=args.j, c=args.c,
                               metric=args.metric)
    values, gaps = spec.evaluate(phi, carrier)
    return {"kind": args.kind, "phi": phi.tolist(), "values": values.tolist(), "gaps": gaps.tolist()}, 0


def _regime_c_squared(T, mu) -> float:
    try:
        return verify.regime_b(T, mu)["c_squared"]
    except verify.HypothesisError as exc:
        raise UsageError(f"--c-squared is required: {exc}") from None


def cmd_sample(args):
    G = resolve_group(args)
    T = resolve_base(args, G)
    mu = resolve_measure(args, G, T)
    if args.action == "draw":
        _rng(args, "sample draw")
        nu_hat = _product_factors(T, args)
        ords = sampling.sample_ordinals(nu_hat, args.seed, args.count, args.threads)
        return {"seed": args.seed, "ordinals": ords.tolist(), "elements": [G.labels()[k] for k in ords]}, 0
    c2 = args.c_squared if args.c_squared is not None else _regime_c_squared(T, mu)
    if args.statistic == "l_cycle_count":
        params = {"l": args.l}
    else:
        params = sampling.random_parameters(args.statistic, G.n, _rng(args, f"statistic {args.statistic}"))
    exp = sampling.DeviationExperiment(args.statistic, params, args.samples, args.seed)
    nu_hat = _product_factors(T, args) if len(G) > sampling.EXACT_CAP else None
    report = sampling.run_deviation_experiment(exp, mu, c2, nu_hat, args.threads,
                                               metric_constants=verify.lipschitz_constants(T, mu))
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(sampling.report_csv(report))
    return report, 0 if report["pass"] else 1


def _product_factors(T, args):
    from .measures import ewens_product, uniform_factors
    if args.measure == "uniform":
        return uniform_factors(T)
    if args.measure == "ewens":
        if args.theta is None:
            raise UsageError("--theta is required for --measure ewens")
        return ewens_product(T, args.theta)
    raise UsageError("--measure: sampling needs uniform or ewens")


def cmd_verify(args):
    _rng(args, "verify")
    seed, trials, threads = args.seed, args.trials, args.threads
    iid = args.inequality
    if iid == "canary":
        reps = [verify.canary(seed)]
    elif iid == "all" and not args.group and not args.parts:
        reps = verify.verify_all(seed, trials, threads=threads)
    elif iid in ("slice", "multinomial") or (iid in ("all", "ckp") and args.parts):
        if not args.parts:
            raise UsageError(f"verify {iid} needs --parts")
        parts = _ints(args.parts, "--parts")
        kind = "slice" if len(parts) == 2 else "multinomial"
        payload = (parts[0], sum(parts)) if kind == "slice" else tuple(parts)
        only = None if iid == "all" else {iid}
        reps = verify.verify_all(seed, trials, configs=[(args.parts, kind, payload)], only=only, threads=threads)
    else:
        G = resolve_group(args)
        if G is None:
            raise UsageError(f"verify {iid} needs --group")
        T = resolve_base(args, G)
        mu = resolve_measure(args, G, T)
        if iid == "all":
            reps = verify.verify_group_config(T, mu, trials, seed, threads=threads)
        elif iid == "tw1":
            reps = [verify.verify_tw1(T, mu, args.metric, trials, seed, c_override=args.c_override, threads=threads)]
        elif iid == "t_tilde":
            reps = [verify.verify_t_tilde(T, mu, args.metric, trials, seed, threads=threads)]
        elif iid == "t_paren":
            reps = [verify.verify_t_paren(T, mu, trials, seed, threads=threads)]
        elif iid == "talagrand":
            reps = [verify.verify_talagrand(T, mu, seed=seed)]
        elif iid == "hoeffding_dual":
            reps = [verify.verify_hoeffding_dual(T, mu, args.metric, seed=seed)]
        else:
            reps = [verify.verify_ckp(mu, trials, seed)]
        for r in reps:
            r.carrier["measure"] = mu.label
    if args.c_override is not None:
        for r in reps:
            r.notes.append(f"c_override={args.c_override!r}")
    data = [r.to_json(not args.summary) for r in reps]
    failed = any(r.status == "fail" for r in reps)
    return {"command": "verify", "inequality": iid, "seed": seed, "trials": trials,
            "status": "fail" if failed else "pass", "reports": data}, 1 if failed else 0


COMMANDS = {"group": cmd_group, "measure": cmd_measure, "transport": cmd_transport, "dual": cmd_dual,
            "sample": cmd_sample, "verify": cmd_verify}


def _emit(payload, path):
    text = payload if isinstance(payload, str) else json.dumps(payload, sort_keys=True, indent=1,
                                                               allow_nan=False) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        payload, code = COMMANDS[args.command](args)
    except (UsageError, GroupError, MeasureError, dualops.DualOpError, sampling.SamplingError) as exc:
        print(f"permconc: error: {exc}", file=sys.stderr)
        return 2
    except TransportError as exc:
        print(f"permconc: solver error: {exc}", file=sys.stderr)
        return 2
    _emit(payload, args.out)
    if args.metadata:
        meta = {"version": __version__, "python": platform.python_version(), "argv": sys.argv[1:] if argv is None
                else list(argv), "seconds": time.perf_counter() - start, "finished": time.time()}
        with open(args.metadata, "w") as fh:
            json.dump(meta, fh, indent=1)
    return code


if __name__ == "__main__":
    sys.exit(main())
