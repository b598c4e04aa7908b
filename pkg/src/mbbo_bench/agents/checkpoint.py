"""Plain-text agent checkpoints.

One ``key = value`` pair per line. Scalars and vectors carry a type tag
(``f:``, ``i:``, ``s:``, ``v:``) so files are self-describing; floats are
written with ``repr`` so a load/save cycle reproduces the file byte for byte.
Q-table rows are stored as ``param.q.<state> = v:...``.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .base import Agent
from .policy import PPOAgent, ReinforceAgent
from .qlearning import QAgent

AGENT_KINDS = {"qlearning": QAgent, "reinforce": ReinforceAgent, "ppo": PPOAgent}
FORMAT_VERSION = "1"


class CheckpointError(ValueError):
    pass


class CheckpointKindError(CheckpointError, TypeError):
    pass


def make_agent(kind: str, **kwargs) -> Agent:
    try:
        return AGENT_KINDS[kind](**kwargs)
    except KeyError:
        raise ValueError(f"unknown agent {kind!r}; expected one of {sorted(AGENT_KINDS)}") from None


def _encode(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return f"i:{int(value)}"
    if isinstance(value, (int, np.integer)):
        return f"i:{int(value)}"
    if isinstance(value, (float, np.floating)):
        return f"f:{float(value)!r}"
    if isinstance(value, str):
        return f"s:{value}"
    arr = np.asarray(value, dtype=float).ravel()
    return "v:" + " ".join(repr(float(x)) for x in arr)


def _decode(field: str, text: str):
    tag, _, body = text.partition(":")
    try:
        if tag == "i":
            return int(body)
        if tag == "f":
            return float(body)
        if tag == "s":
            return body
        if tag == "v":
            return np.array([float(x) for x in body.split()], dtype=float)
    except ValueError as exc:
        raise CheckpointError(f"checkpoint field {field!r}: cannot parse {text!r}") from exc
    raise CheckpointError(f"checkpoint field {field!r}: unknown type tag {tag!r}")


def dumps(agent: Agent) -> str:
    lines = [
        f"format = {FORMAT_VERSION}",
        f"kind = {agent.kind}",
        f"seed = {int(agent.seed)}",
        f"pop_size = {int(agent.pop_size)}",
        f"learning_step = {int(agent.learning_step)}",
        "history = " + " ".join(f"{int(s)}:{float(r)!r}" for s, r in agent.history),
        "rng = " + json.dumps(agent.rng.bit_generator.state, sort_keys=True, separators=(",", ":")),
    ]
    for name, value in agent.get_params().items():
        if isinstance(value, dict):
            for sub in value:
                lines.append(f"param.{name}.{sub} = {_encode(value[sub])}")
        else:
            lines.append(f"param.{name} = {_encode(value)}")
    return "\n".join(lines) + "\n"


def loads(text: str, expected_kind: str | None = None) -> Agent:
    fields: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        key, sep, value = line.partition(" = ")
        if not sep:
            key, sep, value = line.partition(" =")
            if not sep:
                raise CheckpointError(f"line {lineno}: expected 'key = value'")
        fields[key.strip()] = value
    for required in ("format", "kind", "seed", "pop_size", "learning_step", "history", "rng"):
        if required not in fields:
            raise CheckpointError(f"checkpoint field {required!r} is missing")
    kind = fields["kind"].strip()
    if kind not in AGENT_KINDS:
        raise CheckpointError(f"checkpoint field 'kind': unknown agent kind {kind!r}")
    if expected_kind is not None and kind != expected_kind:
        raise CheckpointKindError(f"checkpoint holds a {kind!r} agent, expected {expected_kind!r}")

    def as_int(name):
        try:
            return int(fields[name])
        except ValueError as exc:
            raise CheckpointError(f"checkpoint field {name!r}: not an integer") from exc

    agent = AGENT_KINDS[kind](seed=as_int("seed"), pop_size=as_int("pop_size"))
    agent.learning_step = as_int("learning_step")
    history = []
    for item in fields["history"].split():
        step, _, ret = item.partition(":")
        try:
            history.append((int(step), float(ret)))
        except ValueError as exc:
            raise CheckpointError(f"checkpoint field 'history': bad entry {item!r}") from exc
    agent.history = history
    try:
        agent.rng.bit_generator.state = json.loads(fields["rng"])
    except (ValueError, TypeError, KeyError) as exc:
        raise CheckpointError("checkpoint field 'rng': invalid generator state") from exc

    params: dict = {}
    for key, value in fields.items():
        if not key.startswith("param."):
            continue
        parts = key.split(".", 2)
        if len(parts) == 3:
            params.setdefault(parts[1], {})[parts[2]] = _decode(key, value)
        else:
            params[parts[1]] = _decode(key, value)
    if kind == "qlearning":
        params.setdefault("q", {})
    try:
        agent.set_params(params)
    except KeyError as exc:
        raise CheckpointError(f"checkpoint field 'param.{exc.args[0]}' is missing") from exc
    except ValueError as exc:
        raise CheckpointError(f"checkpoint params: {exc}") from exc
    return agent


def save_checkpoint(agent: Agent, path: str | Path) -> None:
    Path(path).write_text(dumps(agent), encoding="utf-8")


def load_checkpoint(path: str | Path, expected_kind: str | None = None) -> Agent:
    return loads(Path(path).read_text(encoding="utf-8"), expected_kind)
