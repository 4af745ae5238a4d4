"""``qdpcomp`` command line.

Exit codes: 0 pass, 1 privacy failure or violation found, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import __version__, accountant as acc
from .adversary import TEST_CLASSES, falsify
from .channels import (
    NeighborRelation, bell_joint, bell_relation, depolarizing, identity, marginal_channel, proj,
)
from .divergences import privacy_curve, verify_qdp
from .errors import FormatError, InfiniteMoment, QDPError
from .reproduce import NAMES, reproduce
from .serialization import (
    channel_from_json, channel_to_json, dumps, load_json, relation_from_json, relation_to_json,
)

DEFAULT_SEED = 42


class UsageError(Exception):
    pass


def _fixture_builders():
    joint = bell_joint()
    return {
        "bell-joint": lambda: channel_to_json(joint),
        "bell-marginal-1": lambda: channel_to_json(marginal_channel(joint, [2, 2], [0])),
        "bell-marginal-2": lambda: channel_to_json(marginal_channel(joint, [2, 2], [1])),
        "bell-relation": lambda: relation_to_json(bell_relation()),
        "depolarizing-0.5": lambda: channel_to_json(depolarizing(0.5)),
        "identity": lambda: channel_to_json(identity(2)),
        "equal-relation": lambda: relation_to_json(
            NeighborRelation([(proj([1, 0]), proj([1, 0]))])),
    }


def _meta(args, scope: str) -> dict:
    return {"version": __version__, "seed": args.seed, "scope": scope}


def _emit(args, text: str):
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_channel(args):
    if args.channel is None:
        raise UsageError("--channel is required")
    return channel_from_json(load_json(args.channel, "channel"))


def _load_relation(args):
    if args.relation is None:
        raise UsageError("--relation is required")
    return relation_from_json(load_json(args.relation, "relation"))


def _check_dims(ch, rel):
    if ch.dim_in != rel.dim:
        raise FormatError("relation", f"states have dimension {rel.dim}, channel expects {ch.dim_in}")


# -- subcommands -------------------------------------------------------------

def cmd_verify(args) -> int:
    if args.epsilon is None or args.delta is None:
        raise UsageError("verify needs --epsilon and --delta")
    ch, rel = _load_channel(args), _load_relation(args)
    _check_dims(ch, rel)
    verdict = verify_qdp(ch, rel, args.epsilon, args.delta)
    _emit(args, dumps({**_meta(args, "all-povm"), **verdict.to_json()}))
    return 0 if verdict.passed else 1


def cmd_curve(args) -> int:
    ch, rel = _load_channel(args), _load_relation(args)
    _check_dims(ch, rel)
    curve = privacy_curve(ch, rel)
    if args.format == "csv":
        _emit(args, curve.to_csv())
    else:
        _emit(args, dumps({**_meta(args, "all-povm"), "curve": curve.to_json()}))
    return 0


def _eps_list(args) -> list[float]:
    if not args.epsilon_list:
        raise UsageError("give --epsilon (one or more values)")
    eps = list(args.epsilon_list)
    if args.k is not None:
        if len(eps) != 1:
            raise UsageError("--k repeats a single --epsilon value")
        eps = eps * args.k
    return eps


def _pairs(args, n: int | None = None) -> list[tuple[float, float]]:
    pairs = [tuple(p) for p in (args.pair or [])]
    if args.k is not None and len(pairs) == 1:
        pairs = pairs * args.k
    if not pairs or (n is not None and len(pairs) != n):
        raise UsageError(f"give {n or 'one or more'} --pair EPS DELTA values")
    return pairs


def cmd_account(args) -> int:
    kind = args.calculator
    exit_code = 0
    if kind == "basic-locc":
        result = acc.basic_compose_locc(_pairs(args, 2))
    elif kind == "advanced-pure":
        result = acc.advanced_compose_pure(_eps_list(args), _need(args.delta, "--delta"))
    elif kind == "lostar-pure":
        result = acc.advanced_compose_lostar_pure(_eps_list(args), _need(args.delta, "--delta"))
    elif kind == "lostar-approx":
        result = acc.advanced_compose_lostar_approx(_pairs(args), _need(args.delta, "--delta"))
    elif kind == "rdp-convert":
        eps_alpha = _need(args.epsilon, "--epsilon")
        alpha, delta = _need(args.alpha, "--alpha"), _need(args.delta, "--delta")
        params = acc.rdp_to_dp(eps_alpha, alpha, delta)
        result = acc.AccountantResult("all-povm", params.eps, params.delta, lambda_used=alpha,
                                      inputs={"eps_alpha": eps_alpha, "alpha": alpha, "delta": delta})
    else:  # qma
        alpha, delta = _need(args.alpha, "--alpha"), _need(args.delta, "--delta")
        if args.profile:
            profile = acc.MomentProfile.from_json(load_json(args.profile, "profile"))
        else:
            ch, rel = _load_channel(args), _load_relation(args)
            _check_dims(ch, rel)
            grid = tuple(sorted(set(acc.DEFAULT_LAMBDAS) | {alpha}))
            profile = acc.moments_profile(ch, rel, grid)
        profiles = [profile] * (args.k or 1)
        try:
            result = acc.qma_compose(profiles, alpha, delta)
        except InfiniteMoment:
            result = acc.AccountantResult("all-povm", math.inf, delta, lambda_used=alpha,
                                          inputs={"alpha": alpha, "delta": delta, "k": len(profiles)},
                                          extras={"reason": "infinite moment: support condition fails"})
            exit_code = 1
        result.extras["profile"] = acc.profile_add(profiles).to_json()
    report = {**_meta(args, result.scope), **result.to_json(), "calculator": kind}
    _emit(args, dumps(report))
    return exit_code


def _need(value, flag):
    if value is None:
        raise UsageError(f"{flag} is required")
    return value


def cmd_reproduce(args) -> int:
    report = reproduce(args.name, seed=args.seed)
    text = dumps(report)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    sys.stderr.write(f"{args.name}: {'PASS' if report['pass'] else 'FAIL'}\n")
    return 0 if report["pass"] else 1


def cmd_falsify(args) -> int:
    ch, rel = _load_channel(args), _load_relation(args)
    _check_dims(ch, rel)
    eps, delta = _need(args.epsilon, "--epsilon"), _need(args.delta, "--delta")
    rep = falsify(eps, delta, ch, rel, args.test_class, trials=args.trials, seed=args.seed,
                  out_dims=args.out_dims)
    _emit(args, dumps({**_meta(args, args.test_class), **rep.to_json()}))
    return 1 if rep.found else 0


def cmd_fixture(args) -> int:
    builders = _fixture_builders()
    _emit(args, dumps(builders[args.name]()))
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--out", help="write the report here instead of stdout")

    io = argparse.ArgumentParser(add_help=False)
    io.add_argument("--channel", help="channel JSON file")
    io.add_argument("--relation", help="neighbour relation JSON file")

    parser = argparse.ArgumentParser(prog="qdpcomp", description=__doc__.splitlines()[0],
                                     allow_abbrev=False)
    parser.add_argument("--version", action="version", version=f"qdpcomp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common, io], allow_abbrev=False,
                       help="exact (eps, delta) check over a relation")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("curve", parents=[common, io], allow_abbrev=False,
                       help="delta_min over the default eps grid")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(fn=cmd_curve)

    p = sub.add_parser("account", parents=[common, io], allow_abbrev=False,
                       help="composition calculators")
    p.add_argument("calculator", choices=("qma", "basic-locc", "advanced-pure", "lostar-pure",
                                          "lostar-approx", "rdp-convert"))
    p.add_argument("--epsilon", dest="epsilon_list", type=float, nargs="+")
    p.add_argument("--delta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--k", type=int, help="number of identical copies")
    p.add_argument("--pair", type=float, nargs=2, action="append", metavar=("EPS", "DELTA"))
    p.add_argument("--profile", help="moment profile JSON (qma only)")
    p.set_defaults(fn=cmd_account)

    p = sub.add_parser("reproduce", parents=[common], allow_abbrev=False,
                       help="run one named certification")
    p.add_argument("name", help=", ".join(NAMES))
    p.set_defaults(fn=cmd_reproduce)

    p = sub.add_parser("falsify", parents=[common, io], allow_abbrev=False,
                       help="randomised violation search")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--test-class", choices=TEST_CLASSES, default="all-povm")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--out-dims", type=int, nargs="+")
    p.set_defaults(fn=cmd_falsify)

    p = sub.add_parser("fixture", parents=[common], allow_abbrev=False,
                       help="write a built-in channel or relation file")
    p.add_argument("name", choices=sorted(_fixture_builders()))
    p.set_defaults(fn=cmd_fixture)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "account":
        # single-value flags share the --epsilon spelling with the list form
        args.epsilon = args.epsilon_list[0] if args.epsilon_list and len(args.epsilon_list) == 1 else None
    if args.command == "reproduce" and args.name not in NAMES:
        sys.stderr.write(f"error: unknown result {args.name!r}; choose from {', '.join(NAMES)}\n")
        return 2
    if getattr(args, "trials", 1) is not None and getattr(args, "trials", 1) < 0:
        sys.stderr.write("error: --trials must be nonnegative\n")
        return 2
    try:
        return args.fn(args)
    except FormatError as exc:
        sys.stderr.write(f"error: malformed input: {exc}\n")
        return 2
    except (UsageError, QDPError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
