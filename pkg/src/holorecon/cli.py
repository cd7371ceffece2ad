"""holorecon command line: gen | criterion | reconstruct | permute | check-bounds.

Settings come from built-in defaults, then an optional ``--config`` JSON
file, then explicit flags. Every output file carries the resolved config
and the library version, numbers are written as decimal strings, and files
are replaced atomically.

Exit codes: 0 success (verdicts are data), 2 configuration error,
3 precision failure, 4 identity violation, 1 anything else.
"""
from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
import tempfile
import warnings

import gmpy2

from . import __version__
from .diagnostics import (
    check_annulus_products,
    check_net_statistics,
    check_product_lower_bound,
    criterion_under_homography,
    riemann_constant_check,
)
from .directions import (
    apply_permutation,
    delete_subsequence,
    dumps_jsonl,
    gen_dense,
    gen_kappa,
    gen_square_net_sequence,
    gen_theta,
    interleave,
    read_jsonl,
)
from .directions.constructions import build_sigma1, build_sigma2, search_sigma2_witnesses
from .directions.sigma_c import build_sigma_c, pool_size_for
from .divided_differences import criterion_matrix
from .errors import HoloreconError, IdentityViolation, PrecisionFailure
from .numerics import default_precision, from_description, to_mpc
from .reconstruction import Polydisc, ReconstructionRequest, convergence_experiment, verify_identity

EXIT_CONFIG = 2
EXIT_PRECISION = 3
EXIT_IDENTITY = 4

FAMILIES = ("theta", "kappa", "square-net", "dense", "dense-sigma-c", "interleave")
CHECKS = ("product", "annulus", "net", "homography", "riemann")


class ConfigError(Exception):
    pass


DEFAULTS = {
    "gen": {"sequence": {"family": None, "count": None, "pool": None}},
    "criterion": {
        "sequence": {"family": None, "count": None, "input": None, "pool": None},
        "P": 40,
        "Q": 8,
        "homography": [],
        "reciprocal": False,
        "max_precision_bits": 4096,
    },
    "reconstruct": {
        "sequence": {"family": None, "count": None, "input": None, "pool": None},
        "function": {"name": "exp-linear", "a": 1, "b": 1},
        "N_list": [2, 4, 8, 16, 24],
        "M": None,
        "K": {"r1": 0.5, "r2": 0.5, "n_circle": 8},
        "report": None,
        "timing": False,
    },
    "permute": {
        "mode": None,
        "theta_count": 800,
        "kappa_count": 800,
        "count": 25,
        "input": None,
        "R_kappa": None,
        "r_max": 8,
        "p_budget": 24,
        "q_budget": 6,
        "delete_kappa": False,
    },
    "check-bounds": {
        "checks": list(CHECKS),
        "p_max": 80,
        "N_list": [8, 16, 32, 64],
        "net_N_list": [2, 3, 64, 256, 1024],
        "tolerance": 0.25,
        "homography": {"family": "kappa", "u": ["5j"], "P": 40, "Q": 8},
    },
}


# --------------------------------------------------------------------------
# Config resolution
# --------------------------------------------------------------------------

def _merge(base, over):
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text):
    return [x.strip() for x in text.split(",") if x.strip()]


def _set(cfg, path, value):
    node = cfg
    for key in path[:-1]:
        node = node.setdefault(key, {})
    node[path[-1]] = value


def _flag_overrides(args):
    """(config path, value) for every flag given on the command line."""
    table = {
        "family": ("sequence", "family"),
        "count": ("sequence", "count"),
        "input": ("sequence", "input"),
        "pool": ("sequence", "pool"),
        "p_max": ("P",),
        "q_max": ("Q",),
        "homography": ("homography",),
        "reciprocal": ("reciprocal",),
        "function": ("function",),
        "n_list": ("N_list",),
        "truncation": ("M",),
        "radius": ("K",),
        "n_circle": ("K", "n_circle"),
        "report": ("report",),
        "timing": ("timing",),
        "theta_count": ("theta_count",),
        "kappa_count": ("kappa_count",),
        "r_kappa": ("R_kappa",),
        "r_max": ("r_max",),
        "p_budget": ("p_budget",),
        "q_budget": ("q_budget",),
        "delete_kappa": ("delete_kappa",),
        "checks": ("checks",),
        "net_n_list": ("net_N_list",),
        "tolerance": ("tolerance",),
        "max_precision_bits": ("max_precision_bits",),
    }
    if args.command == "permute":
        table.update({"count": ("count",), "input": ("input",)})
    if args.command == "check-bounds":
        table.update({"p_max": ("p_max",), "n_list": ("N_list",)})
    out = []
    for dest, path in table.items():
        val = getattr(args, dest, None)
        if val is None or val is False:
            continue
        if dest == "function":
            try:
                val = json.loads(val)
            except json.JSONDecodeError:
                val = {"name": val}
        if dest == "radius":
            val = {"r1": val, "r2": val}
            out.append((("K", "r1"), val["r1"]))
            out.append((("K", "r2"), val["r2"]))
            continue
        out.append((path, val))
    mode = [m for m in ("sigma1", "sigma2", "sigma_c", "delete_odd", "delete_even") if getattr(args, m, False)]
    if len(mode) > 1:
        raise ConfigError(f"choose one permutation mode, got {mode}")
    if mode:
        out.append((("mode",), mode[0].replace("_", "-")))
    return out


def resolve_config(args):
    cfg = copy.deepcopy(DEFAULTS[args.command])
    cfg["precision_bits"] = default_precision()
    cfg["output"] = None
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        file_cfg.pop("command", None)
        cfg = _merge(cfg, file_cfg)
    for path, val in _flag_overrides(args):
        _set(cfg, path, val)
    if args.precision_bits is not None:
        cfg["precision_bits"] = args.precision_bits
    if args.output is not None:
        cfg["output"] = args.output
    cfg["command"] = args.command
    validate(cfg)
    return cfg


def validate(cfg):
    bits = cfg["precision_bits"]
    if not isinstance(bits, int) or bits < 64:
        raise ConfigError("precision_bits must be an integer >= 64")
    cmd = cfg["command"]
    seq = cfg.get("sequence")
    if seq is not None:
        if seq.get("input") is None:
            if seq.get("family") not in FAMILIES:
                raise ConfigError(f"sequence family must be one of {FAMILIES} (or give an input file)")
        if seq.get("count") is not None and int(seq["count"]) < 1:
            raise ConfigError("count must be >= 1")
    if cmd == "gen" and seq.get("count") is None:
        raise ConfigError("gen needs a count")
    if cmd != "check-bounds" and cfg["output"] is None:
        raise ConfigError("an output path is required")
    if cmd == "criterion" and (cfg["P"] < 1 or cfg["Q"] < 0):
        raise ConfigError("need P >= 1 and Q >= 0")
    if cmd == "reconstruct":
        if not cfg["N_list"] or min(cfg["N_list"]) < 1:
            raise ConfigError("N_list must hold positive integers")
        try:
            from_description(cfg["function"])
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"bad function spec: {exc}") from None
    if cmd == "permute" and cfg["mode"] not in ("sigma1", "sigma2", "sigma-c", "delete-odd", "delete-even"):
        raise ConfigError("permute needs one of --sigma1, --sigma2, --sigma-c, --delete-odd, --delete-even")
    if cmd == "check-bounds":
        bad = [c for c in cfg["checks"] if c not in CHECKS]
        if bad:
            raise ConfigError(f"unknown checks {bad}; known: {CHECKS}")


# --------------------------------------------------------------------------
# Output
# --------------------------------------------------------------------------

def decimalize(obj):
    """Replace every float/mpfr in a JSON-able structure by its decimal string."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, int) or isinstance(obj, str):
        return obj
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        return repr(obj)
    if isinstance(obj, type(gmpy2.mpfr(0))):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): decimalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [decimalize(v) for v in obj]
    return str(obj)


def meta(cfg):
    return {"config": decimalize(cfg), "version": __version__}


def dump_json(obj):
    return json.dumps(decimalize(obj), sort_keys=True, indent=2) + "\n"


def write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --------------------------------------------------------------------------
# Sequences
# --------------------------------------------------------------------------

def build_sequence(spec, bits, default_count=None):
    if spec.get("input"):
        seq, _ = read_jsonl(spec["input"])
        return seq.at_precision(bits) if seq.precision_bits != bits else seq
    n = spec.get("count") or default_count
    if n is None:
        raise ConfigError("sequence count is required")
    n = int(n)
    fam = spec["family"]
    if fam == "theta":
        return gen_theta(n, bits)
    if fam == "kappa":
        return gen_kappa(n, bits)
    if fam == "square-net":
        return gen_square_net_sequence(n, bits)
    if fam == "dense":
        return gen_dense(n, bits)
    if fam == "interleave":
        half = (n + 1) // 2 + 1
        return interleave(gen_theta(half, bits), gen_kappa(half, bits)).prefix(n)
    if fam == "dense-sigma-c":
        pool = gen_dense(int(spec.get("pool") or pool_size_for(n)), bits)
        sigma = build_sigma_c(pool, n)
        return apply_permutation(pool, sigma, n)
    raise ConfigError(f"unknown family {fam!r}")


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------

def cmd_gen(cfg):
    seq = build_sequence(cfg["sequence"], cfg["precision_bits"])
    write_atomic(cfg["output"], dumps_jsonl(seq, meta=decimalize({**meta(cfg), "provenance": seq.provenance})))
    print(dump_json(seq.summary()), end="")
    return 0


def _parse_point(text):
    try:
        return to_mpc(complex(text.replace("i", "j")) if isinstance(text, str) else text)
    except ValueError:
        raise ConfigError(f"cannot parse complex number {text!r}") from None


def cmd_criterion(cfg):
    P, Q = int(cfg["P"]), int(cfg["Q"])
    seq = build_sequence(cfg["sequence"], cfg["precision_bits"], default_count=P + 1)
    if cfg["homography"] or cfg["reciprocal"]:
        us = [_parse_point(u) for u in cfg["homography"]]
        res = criterion_under_homography(
            seq, us, P, Q, include_reciprocal=cfg["reciprocal"], max_bits=int(cfg["max_precision_bits"])
        )
        payload = res.to_json()
        for lab, rep in zip(res.labels, res.reports):
            print(f"[{lab}]")
            print(rep.table())
        print(f"combined verdict: {res.combined_verdict}")
    else:
        rep = criterion_matrix(seq, P, Q, max_bits=int(cfg["max_precision_bits"]))
        payload = rep.to_json()
        print(rep.table())
    write_atomic(cfg["output"], dump_json({"meta": meta(cfg), "result": payload}))
    return 0


def cmd_reconstruct(cfg):
    bits = cfg["precision_bits"]
    f = from_description(cfg["function"])
    N_list = [int(n) for n in cfg["N_list"]]
    seq = build_sequence(cfg["sequence"], bits, default_count=max(N_list))
    K = Polydisc(float(cfg["K"]["r1"]), float(cfg["K"]["r2"]), int(cfg["K"]["n_circle"]))
    curve = convergence_experiment(f, seq, N_list, K, cfg["M"], bits)
    grid = K.grid(bits)
    identity = []
    for N in N_list:
        res = verify_identity(ReconstructionRequest(f, seq, N, grid, cfg["M"], bits))
        identity.append({
            "N": N,
            "residual": res.identity_residual,
            "budget": res.budget,
            "precision_bits": res.precision_bits,
        })
    header = "# " + json.dumps(meta(cfg), sort_keys=True) + "\n"
    body = curve.to_csv(include_time=cfg["timing"])
    if not cfg["timing"]:
        body = _blank_timing(body)
    write_atomic(cfg["output"], header + body)
    report_path = cfg["report"] or cfg["output"] + ".identity.json"
    write_atomic(
        report_path,
        dump_json({"meta": meta(cfg), "result": {"identity": identity, "classification": curve.classification()}}),
    )
    print(body, end="")
    print(f"classification: {curve.classification()}")
    return 0


def _blank_timing(csv_text):
    lines = csv_text.splitlines()
    out = [lines[0]] + [line.rsplit(",", 1)[0] + ",NA" for line in lines[1:]]
    return "\n".join(out) + "\n"


def _fit_R_kappa(kappa, bits):
    P = min(40, len(kappa) - 1)
    return max(1.0, criterion_matrix(kappa.prefix(P + 1), P, 8, precision_bits=bits).R_hat)


def _check_reach(idx, base):
    if idx and max(idx) > len(base):
        raise ConfigError(
            f"the permutation reaches interleaved index {max(idx)} but only {len(base)} points exist;"
            " raise theta_count/kappa_count or lower count"
        )


def cmd_permute(cfg):
    bits = cfg["precision_bits"]
    mode = cfg["mode"]
    n = int(cfg["count"])
    record = {"mode": mode}
    if mode in ("sigma1", "sigma2"):
        theta = gen_theta(int(cfg["theta_count"]), bits)
        kappa = gen_kappa(int(cfg["kappa_count"]), bits)
        base = interleave(theta, kappa)
        if mode == "sigma1":
            R = cfg["R_kappa"] if cfg["R_kappa"] is not None else _fit_R_kappa(kappa, bits)
            sigma = build_sigma1(theta, kappa, R)
            record.update({"R_kappa": R, "levels": sigma.levels})
        else:
            search = search_sigma2_witnesses(
                theta, kappa, int(cfg["r_max"]), int(cfg["p_budget"]), int(cfg["q_budget"]), bits
            )
            record.update(search.to_json())
            if not search.witnesses:
                print(
                    f"warning: no divergence witness within budgets p<={cfg['p_budget']}, q<={cfg['q_budget']}",
                    file=sys.stderr,
                )
            sigma = build_sigma2(theta, kappa, search.witnesses)
        if cfg["delete_kappa"]:
            # enough positions to contain the first n thetas
            if mode == "sigma1":
                if n > len(sigma.levels):
                    raise ConfigError(f"only {len(sigma.levels)} thetas can be placed; raise theta_count")
                m = sigma.levels[n - 1] + n
            else:
                m = 2 * n + len(record["witnesses"]) + 2
            idx = sigma.prefix(m)
            _check_reach(idx, base)
            seq = apply_permutation(base, sigma, m)
            seq = delete_subsequence(seq, lambda j: idx[j - 1] % 2 == 1)
            seq = seq.prefix(min(n, len(seq)))
        else:
            _check_reach(sigma.prefix(n), base)
            seq = apply_permutation(base, sigma, n)
    elif mode == "sigma-c":
        pool = gen_dense(pool_size_for(n), bits)
        sigma = build_sigma_c(pool, n)
        seq = apply_permutation(pool, sigma, n)
        record["pool"] = len(pool)
    else:
        if cfg["input"]:
            base, _ = read_jsonl(cfg["input"])
        else:
            half = int(cfg["theta_count"])
            base = interleave(gen_theta(half, bits), gen_kappa(int(cfg["kappa_count"]), bits))
        parity = 1 if mode == "delete-odd" else 0
        seq = delete_subsequence(base, lambda j: j % 2 == parity)
        seq = seq.prefix(min(n, len(seq)))
    write_atomic(
        cfg["output"],
        dumps_jsonl(seq, meta=decimalize({**meta(cfg), "permutation": record, "provenance": seq.provenance})),
    )
    print(dump_json({"permutation": record, "summary": seq.summary()}), end="")
    return 0


def cmd_check_bounds(cfg):
    bits = cfg["precision_bits"]
    reports = []
    for check in cfg["checks"]:
        if check == "product":
            p = int(cfg["p_max"])
            reports.append(check_product_lower_bound(gen_square_net_sequence(p + 1, bits), p).to_json())
        elif check in ("annulus", "net"):
            N_list = cfg["N_list"] if check == "annulus" else cfg["net_N_list"]
            n = max(N_list)
            pool = gen_dense(pool_size_for(n), bits)
            seq = apply_permutation(pool, build_sigma_c(pool, n), n)
            rep = check_annulus_products(seq, N_list) if check == "annulus" else check_net_statistics(
                seq, N_list, cfg["tolerance"]
            )
            reports.append(rep.to_json())
        elif check == "homography":
            h = cfg["homography"]
            P = int(h["P"])
            seq = build_sequence({"family": h["family"], "count": P + 1}, bits)
            res = criterion_under_homography(seq, [_parse_point(u) for u in h["u"]], P, int(h["Q"]))
            reports.append({"name": "criterion-under-homography", **res.to_json()})
        elif check == "riemann":
            reports.append(riemann_constant_check().to_json())
    for rep in reports:
        if "pass" in rep:
            print(f"{rep['name']:<32} pass={'yes' if rep['pass'] else 'no'} margin={rep['margin']!r}")
        else:
            print(f"{rep['name']:<32} verdict={rep['combined_verdict']}")
    if cfg["output"]:
        write_atomic(cfg["output"], dump_json({"meta": meta(cfg), "result": reports}))
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "criterion": cmd_criterion,
    "reconstruct": cmd_reconstruct,
    "permute": cmd_permute,
    "check-bounds": cmd_check_bounds,
}


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def _common(p):
    p.add_argument("--config", help="JSON file with settings; flags override it")
    p.add_argument("--output", help="output file path")
    p.add_argument("--precision-bits", type=int, dest="precision_bits")


def _sequence_flags(p, with_input=True):
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--count", type=int)
    p.add_argument("--pool", type=int, help="dense prefix length for dense-sigma-c")
    if with_input:
        p.add_argument("--input", help="JSON-lines sequence file")


def build_parser():
    parser = argparse.ArgumentParser(prog="holorecon", allow_abbrev=False)
    parser.add_argument("--version", action="version", version=f"holorecon {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a direction sequence", allow_abbrev=False)
    _common(p)
    _sequence_flags(p, with_input=False)

    p = sub.add_parser("criterion", help="growth criterion matrix and verdict", allow_abbrev=False)
    _common(p)
    _sequence_flags(p)
    p.add_argument("--p-max", type=int, dest="p_max")
    p.add_argument("--q-max", type=int, dest="q_max")
    p.add_argument("--homography", type=_str_list, help="comma-separated poles u, e.g. 5i,3")
    p.add_argument("--reciprocal", action="store_true", default=None)
    p.add_argument("--max-precision-bits", type=int, dest="max_precision_bits", help="cap for precision escalation")

    p = sub.add_parser("reconstruct", help="convergence curve of E_N and identity residuals", allow_abbrev=False)
    _common(p)
    _sequence_flags(p)
    p.add_argument("--function", help='catalog name or JSON, e.g. \'{"name": "exp-linear", "a": 1, "b": 1}\'')
    p.add_argument("--n-list", type=_int_list, dest="n_list")
    p.add_argument("--truncation", type=int, help="series truncation degree M")
    p.add_argument("--radius", type=float)
    p.add_argument("--n-circle", type=int, dest="n_circle")
    p.add_argument("--report", help="identity report path (default: OUTPUT.identity.json)")
    p.add_argument("--timing", action="store_true", default=None, help="record wall times (breaks byte determinism)")

    p = sub.add_parser("permute", help="rearrange or thin a sequence", allow_abbrev=False)
    _common(p)
    for mode in ("sigma1", "sigma2", "sigma-c", "delete-odd", "delete-even"):
        p.add_argument(f"--{mode}", action="store_true", dest=mode.replace("-", "_"))
    p.add_argument("--count", type=int, help="length of the output sequence")
    p.add_argument("--input", help="base sequence for the delete modes")
    p.add_argument("--theta-count", type=int, dest="theta_count")
    p.add_argument("--kappa-count", type=int, dest="kappa_count")
    p.add_argument("--r-kappa", type=float, dest="r_kappa")
    p.add_argument("--r-max", type=int, dest="r_max")
    p.add_argument("--p-budget", type=int, dest="p_budget")
    p.add_argument("--q-budget", type=int, dest="q_budget")
    p.add_argument("--delete-kappa", action="store_true", default=None, dest="delete_kappa")

    p = sub.add_parser("check-bounds", help="numerical checks of the product and density bounds", allow_abbrev=False)
    _common(p)
    p.add_argument("--checks", type=_str_list, help=f"comma-separated subset of {','.join(CHECKS)}")
    p.add_argument("--p-max", type=int, dest="p_max")
    p.add_argument("--n-list", type=_int_list, dest="n_list")
    p.add_argument("--net-n-list", type=_int_list, dest="net_n_list")
    p.add_argument("--tolerance", type=float)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PrecisionFailure as exc:
        print(f"precision failure: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except IdentityViolation as exc:
        print(f"identity violation: {exc}", file=sys.stderr)
        return EXIT_IDENTITY
    except (HoloreconError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(exc, (ValueError, OSError)) else 1


if __name__ == "__main__":
    sys.exit(main())
