"""Command-line front end: ``cfqsim <command> [flags]``.

Every flag can also come from a JSON config file (``--config FILE``) whose
keys are the flag names with underscores; command-line flags win over the
file, and the file wins over the ``CFQSIM_SEED`` environment variable.

Exit codes: 0 success, 2 usage error, 3 domain error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, fields
from typing import Any, Optional, Sequence

import jsonschema
import numpy as np

from . import optics, paths, protocol
from .errors import CfqsimError, EmptyAfterPostselection, OutputError, UsageError
from .output import emit, write
from .protocol import OUTCOMES, ProtocolParams

COMMANDS = ("probs", "simulate", "message", "popescu", "sweep", "weak-trace", "histories", "compare")
CONVENTIONS = {"block-means-one": protocol.BLOCK_MEANS_ONE, "block-means-zero": protocol.BLOCK_MEANS_ZERO}
DEFAULT_MESSAGE_LENGTH = 16

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "cfqsim run configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "theta_out": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": math.pi / 2},
        "n_inner": {"type": "integer", "minimum": 1},
        "bit_convention": {"enum": list(CONVENTIONS)},
        "inner_loss": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "bit": {"enum": [0, 1]},
        "bits": {"type": "string", "pattern": "^[01]+$"},
        "n_bits": {"type": "integer", "minimum": 1},
        "trials": {"type": "integer", "minimum": 1},
        "postselect": {"enum": ["D0", "D1", "D3"]},
        "eps": {"type": "number", "minimum": 0},
        "max_slices": {"type": "integer", "minimum": 1},
        "sin2_grid": {"type": "string"},
        "theta_grid": {"type": "string"},
        "n_grid": {"type": "string"},
        "d0_topmost": {"type": "boolean"},
        "blocker_only": {"type": "boolean"},
        "random_positions": {"type": "boolean"},
        "format": {"enum": ["json", "csv"]},
        "out": {"type": "string"},
    },
}


@dataclass
class RunConfig:
    command: str
    theta_out: float = math.pi / 4
    n_inner: int = 25
    bit_convention: str = "block-means-one"
    inner_loss: float = 1.0
    seed: int = 0
    bit: Optional[int] = None
    bits: Optional[str] = None
    n_bits: int = DEFAULT_MESSAGE_LENGTH
    trials: int = 100_000
    postselect: str = "D1"
    eps: float = 1e-10
    max_slices: Optional[int] = None
    sin2_grid: Optional[str] = None
    theta_grid: Optional[str] = None
    n_grid: Optional[str] = None
    d0_topmost: bool = False
    blocker_only: bool = False
    random_positions: bool = False
    format: str = "json"
    out: Optional[str] = None

    def params(self) -> ProtocolParams:
        return ProtocolParams(
            theta_out=self.theta_out,
            n_inner=self.n_inner,
            bit_convention=CONVENTIONS[self.bit_convention],
            inner_loss=self.inner_loss,
            seed=self.seed,
        )


# ---------------------------------------------------------------- parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("must be an unsigned 64-bit integer")
    return value


def _theta(text: str) -> float:
    value = float(text)
    if not 0 < value < math.pi / 2:
        raise argparse.ArgumentTypeError(f"must lie in (0, pi/2), got {value}")
    return value


def _loss(text: str) -> float:
    value = float(text)
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1], got {value}")
    return value


def _bitstring(text: str) -> str:
    if not text or set(text) - {"0", "1"}:
        raise argparse.ArgumentTypeError(f"must contain only 0/1 characters, got {text!r}")
    return text


def _nonneg_float(text: str) -> float:
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cfqsim", description="Single-outer-cycle counterfactual communication simulator.")
    parser.add_argument("--config", help="JSON config file; keys mirror the flags")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--theta-out", type=_theta, default=math.pi / 4, help="outer rotation angle (rad)")
        p.add_argument("--n-inner", type=_positive_int, default=25, help="number of inner cycles")
        p.add_argument("--bit-convention", choices=list(CONVENTIONS), default="block-means-one")
        p.add_argument("--inner-loss", type=_loss, default=1.0, help="per-cycle arm transmission")
        p.add_argument("--seed", type=_seed, default=None)
        p.add_argument("--format", choices=["json", "csv"], default="json")
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--config", help=argparse.SUPPRESS)

    def bit(p, required=False):
        p.add_argument("--bit", type=int, choices=[0, 1], required=required, default=None)

    def message_flags(p):
        p.add_argument("--bits", type=_bitstring, default=None, help="fixed message, e.g. 1011001110001011")
        p.add_argument("--n-bits", type=_positive_int, default=DEFAULT_MESSAGE_LENGTH)
        p.add_argument("--trials", type=_positive_int, default=100_000)

    p = sub.add_parser("probs", help="exact round distributions")
    common(p)
    bit(p)
    p.add_argument("--d0-topmost", action=argparse.BooleanOptionalAction, default=False)

    p = sub.add_parser("simulate", help="Monte Carlo rounds")
    common(p)
    bit(p)
    p.add_argument("--trials", type=_positive_int, default=100_000)

    p = sub.add_parser("message", help="post-selected whole-message transfer")
    common(p)
    message_flags(p)

    p = sub.add_parser("popescu", help="no-coin simplification")
    common(p)
    message_flags(p)
    p.add_argument("--random-positions", action=argparse.BooleanOptionalAction, default=False)

    p = sub.add_parser("sweep", help="accuracy/retention sweep")
    common(p)
    p.add_argument("--sin2-grid", default=None, help="comma-separated sin^2(theta_out) values")
    p.add_argument("--theta-grid", default=None, help="comma-separated theta_out values")
    p.add_argument("--n-grid", default=None, help="comma-separated inner-cycle counts")
    p.add_argument("--n-bits", type=_positive_int, default=DEFAULT_MESSAGE_LENGTH)
    p.add_argument("--trials", type=_positive_int, default=100_000)

    path_help = {"weak-trace": "weak values over Bob's region", "histories": "consistent-histories report"}
    for name in ("weak-trace", "histories"):
        p = sub.add_parser(name, help=path_help[name])
        common(p)
        bit(p, required=True)
        p.add_argument("--postselect", choices=["D0", "D1", "D3"], default="D1")
        p.add_argument("--blocker-only", action=argparse.BooleanOptionalAction, default=False)
        p.add_argument("--d0-topmost", action=argparse.BooleanOptionalAction, default=False)
        if name == "histories":
            p.add_argument("--eps", type=_nonneg_float, default=1e-10)
            p.add_argument("--max-slices", type=_positive_int, default=None)

    p = sub.add_parser("compare", help="toy protocol vs no-coin variant")
    common(p)
    message_flags(p)
    return parser


def _config_tokens(config: dict) -> list[str]:
    tokens = []
    for key, value in config.items():
        if key == "command":
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            tokens.append(flag if value else "--no-" + key.replace("_", "-"))
        else:
            tokens += [flag, str(value)]
    return tokens


def load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise OutputError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise UsageError(f"config {path}: {where}: {exc.message}") from None
    return data


def _split_config_flag(argv: list[str]) -> tuple[list[str], Optional[str]]:
    rest, path = [], None
    it = iter(argv)
    for tok in it:
        if tok == "--config":
            path = next(it, None)
            if path is None:
                raise UsageError("cfqsim: argument --config: expected one argument")
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
        else:
            rest.append(tok)
    return rest, path


def parse_config(argv: Sequence[str], config_file: Optional[str] = None, env=None) -> RunConfig:
    """Resolve flags, config file and environment into a ``RunConfig``."""
    env = os.environ if env is None else env
    rest, path = _split_config_flag(list(argv))
    path = path or config_file
    file_cfg = load_config_file(path) if path else {}

    if rest and rest[0] in ("-h", "--help"):
        build_parser().parse_args(rest[:1])  # prints help and exits
    if rest and rest[0] in COMMANDS:
        command, flags = rest[0], rest[1:]
    elif "command" in file_cfg:
        command, flags = file_cfg["command"], rest
    elif rest and not rest[0].startswith("-"):
        raise UsageError(f"cfqsim: invalid command {rest[0]!r} (choose from {', '.join(COMMANDS)})")
    else:
        raise UsageError("cfqsim: a command is required")

    ns = build_parser().parse_args([command, *_config_tokens(file_cfg), *flags])
    values = {k: v for k, v in vars(ns).items() if k != "config"}
    if values.get("seed") is None:
        raw = env.get("CFQSIM_SEED")
        if raw is not None:
            try:
                values["seed"] = _seed(raw)
            except (argparse.ArgumentTypeError, ValueError):
                raise UsageError(f"CFQSIM_SEED must be an unsigned 64-bit integer, got {raw!r}") from None
        else:
            values["seed"] = 0
    known = {f.name for f in fields(RunConfig)}
    return RunConfig(**{k: v for k, v in values.items() if k in known})


# ---------------------------------------------------------------- commands


def _params_doc(cfg: RunConfig) -> dict:
    return {
        "theta_out": cfg.theta_out,
        "sin2_theta": math.sin(cfg.theta_out) ** 2,
        "n_inner": cfg.n_inner,
        "bit_convention": cfg.bit_convention,
        "inner_loss": cfg.inner_loss,
        "seed": cfg.seed,
    }


def _bits_for(cfg: RunConfig):
    return protocol.parse_bits(cfg.bits) if cfg.bits else None


def _length(cfg: RunConfig) -> int:
    return len(cfg.bits) if cfg.bits else cfg.n_bits


def cmd_probs(cfg: RunConfig):
    params = cfg.params()
    doc = {"command": "probs", "status": "ok", "params": _params_doc(cfg), "d0_topmost": cfg.d0_topmost, "results": []}
    rows = []
    for x in [cfg.bit] if cfg.bit is not None else [0, 1]:
        sim = protocol.round_distribution(params, x, d0_topmost=cfg.d0_topmost)
        analytic = protocol.analytic_round_distribution(params, x) if params.lossless else None
        diff = max(abs(sim[k] - analytic[k]) for k in OUTCOMES) if analytic else None
        doc["results"].append(
            {
                "bit": x,
                "blocked": params.blocked(x),
                "simulated": sim,
                "analytic": analytic,
                "max_abs_difference": diff,
            }
        )
        for k in OUTCOMES:
            rows.append({"bit": x, "outcome": k, "simulated": sim[k], "analytic": analytic[k] if analytic else None})
    return doc, rows, ["bit", "outcome", "simulated", "analytic"]


def cmd_simulate(cfg: RunConfig):
    params = cfg.params()
    rng = np.random.default_rng(cfg.seed)
    doc = {"command": "simulate", "status": "ok", "params": _params_doc(cfg), "trials": cfg.trials}
    if cfg.bit is not None:
        sent = np.full(cfg.trials, cfg.bit, dtype=np.int8)
    else:
        sent = rng.integers(0, 2, size=cfg.trials, dtype=np.int8)
    outcomes = protocol.sample_round_outcomes(params, sent, rng)
    counts = np.bincount(outcomes, minlength=len(OUTCOMES))
    rows = []
    if cfg.bit is not None:
        expected = protocol.round_distribution(params, cfg.bit)
        doc["bit"] = cfg.bit
        doc["counts"] = {k: int(c) for k, c in zip(OUTCOMES, counts)}
        doc["frequencies"] = {k: c / cfg.trials for k, c in zip(OUTCOMES, counts)}
        doc["expected"] = expected
        sigma = {k: math.sqrt(p * (1 - p) / cfg.trials) for k, p in expected.items()}
        doc["sigma"] = sigma
        for k, c in zip(OUTCOMES, counts):
            rows.append({"outcome": k, "count": int(c), "frequency": c / cfg.trials, "expected": expected[k], "sigma": sigma[k]})
    else:
        doc["bit"] = None
        doc["counts"] = {k: int(c) for k, c in zip(OUTCOMES, counts)}
        try:
            doc["channel"] = protocol.round_statistics(sent, outcomes)
        except EmptyAfterPostselection:
            doc["status"] = "empty_after_postselection"
            doc["channel"] = None
        doc["exact_channel"] = protocol.exact_round_channel(params) if params.lossless else None
        for k, c in zip(OUTCOMES, counts):
            rows.append({"outcome": k, "count": int(c), "frequency": c / cfg.trials, "expected": None, "sigma": None})
    return doc, rows, ["outcome", "count", "frequency", "expected", "sigma"]


def _toy_message_doc(params, cfg, rng):
    bits, length = _bits_for(cfg), _length(cfg)
    batch = protocol.simulate_messages(params, cfg.trials, length, rng, bits)
    doc = {
        "retained_messages": int(batch.retained.sum()),
        "sampled_retention": float(batch.retained.mean()),
        "exact_retention": None,
        "exact_accuracy": None,
        "status": "ok",
        "stats": None,
    }
    if params.lossless:
        doc["exact_retention"] = protocol.exact_message_retention(params, bits, length)
        doc["exact_accuracy"] = protocol.exact_message_accuracy(params, bits, length)
    try:
        doc["stats"] = protocol.batch_statistics(batch)
    except EmptyAfterPostselection:
        doc["status"] = "empty_after_postselection"
    return doc


def cmd_message(cfg: RunConfig):
    params = cfg.params()
    rng = np.random.default_rng(cfg.seed)
    body = _toy_message_doc(params, cfg, rng)
    doc = {
        "command": "message",
        "status": body.pop("status"),
        "params": _params_doc(cfg),
        "bits": cfg.bits,
        "message_length": _length(cfg),
        "trials": cfg.trials,
        **body,
    }
    stats = doc["stats"]
    row = {
        "bits": cfg.bits or "",
        "message_length": _length(cfg),
        "trials": cfg.trials,
        "retained_messages": doc["retained_messages"],
        "sampled_retention": doc["sampled_retention"],
        "exact_retention": doc["exact_retention"],
        "sampled_accuracy": stats.message_accuracy if stats else None,
        "exact_accuracy": doc["exact_accuracy"],
        "mutual_information": stats.mutual_information_bits if stats else None,
    }
    return doc, [row], list(row)


def _popescu_doc(params, cfg, rng):
    bits, length = _bits_for(cfg), _length(cfg)
    batch = protocol.simulate_popescu(params, cfg.trials, length, rng, bits, cfg.random_positions)
    retained = batch.retained
    live_ones = bool(np.all(np.where(batch.live_mask[retained], batch.sent[retained] == 1, True)))
    doc = {
        "live_positions": int(batch.live_mask[0].sum()),
        "retained_messages": int(retained.sum()),
        "sampled_retention": float(retained.mean()),
        "exact_retention": None,
        "retained_have_all_live_ones": live_ones,
        "guessed_positions": None,
    }
    if params.lossless:
        doc["exact_retention"] = (
            protocol.exact_popescu_retention(params, bits)
            if bits
            else protocol.exact_popescu_random_retention(params, length)
        )
    if (~batch.live_mask).any():
        doc["guessed_positions"] = batch.guessed_statistics()
    return doc


def cmd_popescu(cfg: RunConfig):
    params = cfg.params()
    rng = np.random.default_rng(cfg.seed)
    body = _popescu_doc(params, cfg, rng)
    doc = {
        "command": "popescu",
        "status": "ok",
        "params": _params_doc(cfg),
        "bits": cfg.bits,
        "message_length": _length(cfg),
        "trials": cfg.trials,
        **body,
    }
    guessed = body["guessed_positions"]
    row = {
        "message_length": _length(cfg),
        "trials": cfg.trials,
        "live_positions": body["live_positions"],
        "retained_messages": body["retained_messages"],
        "sampled_retention": body["sampled_retention"],
        "exact_retention": body["exact_retention"],
        "retained_have_all_live_ones": body["retained_have_all_live_ones"],
        "guessed_mutual_information": guessed.mutual_information_bits if guessed else None,
    }
    return doc, [row], list(row)


def cmd_compare(cfg: RunConfig):
    params = cfg.params()
    toy = _toy_message_doc(params, cfg, np.random.default_rng(cfg.seed))
    pop = _popescu_doc(params, cfg, np.random.default_rng(cfg.seed + 1))
    toy_stats = toy["stats"]
    rows = [
        {
            "protocol": "toy",
            "retention": toy["sampled_retention"],
            "exact_retention": toy["exact_retention"],
            "accuracy": toy_stats.message_accuracy if toy_stats else None,
            "exact_accuracy": toy["exact_accuracy"],
            "mutual_information": toy_stats.mutual_information_bits if toy_stats else None,
            "exact_retry_mutual_information": (
                protocol.exact_round_channel(params, retries=True).mutual_information_bits if params.lossless else None
            ),
        },
        {
            "protocol": "popescu_no_coin",
            "retention": pop["sampled_retention"],
            "exact_retention": pop["exact_retention"],
            "accuracy": None,
            "exact_accuracy": None,
            "mutual_information": (
                pop["guessed_positions"].mutual_information_bits if pop["guessed_positions"] else None
            ),
            "exact_retry_mutual_information": None,
        },
    ]
    doc = {
        "command": "compare",
        "status": toy["status"],
        "params": _params_doc(cfg),
        "message_length": _length(cfg),
        "trials": cfg.trials,
        "protocols": rows,
        "popescu_retained_have_all_live_ones": pop["retained_have_all_live_ones"],
    }
    return doc, rows, list(rows[0])


def _float_list(text: str, flag: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cfqsim sweep: argument {flag}: expected comma-separated numbers, got {text!r}") from None


def cmd_sweep(cfg: RunConfig):
    if cfg.sin2_grid is not None and cfg.theta_grid is not None:
        raise UsageError("cfqsim sweep: argument --theta-grid: not allowed with --sin2-grid")
    if cfg.theta_grid is not None:
        thetas = _float_list(cfg.theta_grid, "--theta-grid")
    else:
        sin2 = _float_list("0.5,0.9,0.99" if cfg.sin2_grid is None else cfg.sin2_grid, "--sin2-grid")
        if any(not 0 < s < 1 for s in sin2):
            raise UsageError("cfqsim sweep: argument --sin2-grid: values must lie in (0, 1)")
        thetas = [math.asin(math.sqrt(s)) for s in sin2]
    ns = _float_list(cfg.n_grid, "--n-grid") if cfg.n_grid else [cfg.n_inner]
    if any(n != int(n) or n < 1 for n in ns):
        raise UsageError("cfqsim sweep: argument --n-grid: values must be positive integers")
    grid = [
        ProtocolParams(theta, int(n), CONVENTIONS[cfg.bit_convention], 1.0, cfg.seed)
        for n in ns
        for theta in thetas
    ]
    rows = protocol.sweep(grid, cfg.n_bits, cfg.trials, cfg.seed)
    doc = {"command": "sweep", "status": "ok", "message_length": cfg.n_bits, "trials": cfg.trials, "seed": cfg.seed, "rows": rows}
    return doc, rows, list(protocol.SWEEP_COLUMNS)


def cmd_weak_trace(cfg: RunConfig):
    params = cfg.params()
    circuit = protocol.build_toy_circuit(params, params.blocked(cfg.bit), d0_topmost=cfg.d0_topmost)
    region = paths.bob_region(circuit, cfg.blocker_only)
    report = paths.weak_value_profile(circuit, cfg.postselect, region)
    labels = ("start",) + circuit.step_labels
    entries = []
    for e in report.entries:
        entries.append(
            {
                "timestep": e.timestep,
                "after": labels[e.timestep],
                "mode": e.mode,
                "forward_amp": e.forward_amp,
                "backward_amp": e.backward_amp,
                "weak_value": e.weak_value,
                "defined": e.defined,
            }
        )
    doc = {
        "command": "weak-trace",
        "status": "ok",
        "params": _params_doc(cfg),
        "bit": cfg.bit,
        "blocked": params.blocked(cfg.bit),
        "postselect": cfg.postselect,
        "region": report.region,
        "overlap": report.overlap,
        "max_abs_weak_value_in_region": report.max_abs_weak_value_in_region,
        "entries": entries,
    }
    rows = [
        {
            "timestep": e["timestep"],
            "after": e["after"],
            "mode": e["mode"],
            "weak_value_re": e["weak_value"].real if e["defined"] else None,
            "weak_value_im": e["weak_value"].imag if e["defined"] else None,
            "abs_weak_value": abs(e["weak_value"]) if e["defined"] else None,
        }
        for e in entries
    ]
    return doc, rows, ["timestep", "after", "mode", "weak_value_re", "weak_value_im", "abs_weak_value"]


def cmd_histories(cfg: RunConfig):
    params = cfg.params()
    circuit = protocol.build_toy_circuit(params, params.blocked(cfg.bit), d0_topmost=cfg.d0_topmost)
    family = paths.default_family(circuit, max_slices=cfg.max_slices, blocker_only=cfg.blocker_only)
    matrix = paths.decoherence_functional(circuit, family, cfg.postselect, cfg.eps)
    report = paths.consistency_report(matrix, cfg.eps)
    probs = matrix.history_probabilities
    short = {paths.ALICE: "A", paths.BOB: "B"}
    histories = [
        {"history": "".join(short[s] for s in h), "weight": float(matrix.entries[i, i].real), "probability": probs[h]}
        for i, h in enumerate(matrix.histories)
    ]
    doc = {
        "command": "histories",
        "status": "ok",
        "params": _params_doc(cfg),
        "bit": cfg.bit,
        "blocked": params.blocked(cfg.bit),
        "postselect": cfg.postselect,
        "slice_timesteps": list(family.slice_timesteps),
        "eps": cfg.eps,
        "postselect_probability": matrix.postselect_probability,
        "consistent": report.consistent,
        "max_offdiag": report.max_offdiag,
        "bob_history_probability": report.bob_history_probability,
        "nonzero_histories": histories,
    }
    return doc, histories, ["history", "weight", "probability"]


HANDLERS = {
    "probs": cmd_probs,
    "simulate": cmd_simulate,
    "message": cmd_message,
    "popescu": cmd_popescu,
    "sweep": cmd_sweep,
    "weak-trace": cmd_weak_trace,
    "histories": cmd_histories,
    "compare": cmd_compare,
}


def render(cfg: RunConfig) -> bytes:
    doc, rows, columns = HANDLERS[cfg.command](cfg)
    if cfg.format == "csv":
        return emit(rows, "csv", columns)
    return emit(doc, "json")


def execute(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout if stdout is not None else sys.stdout.buffer
    write(render(cfg), cfg.out, stdout)
    return 0


def main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stderr = stderr if stderr is not None else sys.stderr
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        return execute(cfg, stdout)
    except CfqsimError as exc:
        print(f"error: {exc}", file=stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
