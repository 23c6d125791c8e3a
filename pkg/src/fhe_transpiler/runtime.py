"""Gate-circuit interpreter with level-parallel dispatch.

Gates are grouped into levels: a gate's level is one more than the highest
level among its operands, with circuit inputs at level 0. All gates of one
level are independent, so a level may be split across worker threads in any
order; the end of each level is a barrier. Results therefore do not depend on
the worker count or on the order of gates inside a level.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .backend import GateBackend
from .booleanifier import GATE_ARITY, CircuitError, GateCircuit

# levels smaller than this run inline even when workers are available
MIN_PARALLEL_LEVEL = 64


@dataclass(frozen=True)
class Schedule:
    levels: tuple[tuple[int, ...], ...]

    @property
    def depth(self) -> int:
        return len(self.levels)

    def problems(self, c: GateCircuit) -> list[str]:
        """Violations of the level property; empty for a valid schedule."""
        out = []
        level_of: dict[int, int] = {w: 0 for grp in c.inputs for w in grp.wires}
        seen: list[int] = []
        gates = {g.id: g for g in c.gates}
        for k, level in enumerate(self.levels, 1):
            for gid in level:
                g = gates.get(gid)
                if g is None:
                    out.append(f"level {k} lists unknown gate w{gid}")
                    continue
                for o in g.operands:
                    if level_of.get(o, k) >= k:
                        out.append(f"gate w{gid} at level {k} depends on w{o} which is not at an earlier level")
            for gid in level:
                level_of[gid] = k
            seen.extend(level)
        if sorted(seen) != sorted(gates):
            out.append("levels do not contain every gate exactly once")
        return out


def schedule_levels(c: GateCircuit) -> Schedule:
    """Longest-path level assignment (Kahn's algorithm, so order is not assumed)."""
    inputs = {w for grp in c.inputs for w in grp.wires}
    gates = {g.id: g for g in c.gates}
    users: dict[int, list[int]] = {}
    pending: dict[int, int] = {}
    for g in c.gates:
        n = 0
        for o in g.operands:
            if o in inputs:
                continue
            if o not in gates:
                raise CircuitError(f"gate w{g.id} uses undefined wire w{o}")
            users.setdefault(o, []).append(g.id)
            n += 1
        pending[g.id] = n
    level = {gid: 1 for gid, n in pending.items() if n == 0}
    frontier = [gid for gid in gates if pending[gid] == 0]
    done = 0
    while frontier:
        nxt = []
        for gid in frontier:
            done += 1
            for u in users.get(gid, ()):
                level[u] = max(level.get(u, 1), level[gid] + 1)
                pending[u] -= 1
                if pending[u] == 0:
                    nxt.append(u)
        frontier = nxt
    if done != len(gates):
        raise CircuitError("circuit contains a cycle")
    buckets: list[list[int]] = [[] for _ in range(max(level.values(), default=0))]
    for g in c.gates:
        buckets[level[g.id] - 1].append(g.id)
    return Schedule(tuple(tuple(b) for b in buckets))


@dataclass
class ExecStats:
    counts: dict[str, int]
    depth: int
    wall_time: float
    level_max_noise: list[int] | None = None
    parallelism: int = 1
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def total_gates(self) -> int:
        return sum(self.counts.values())

    @property
    def max_noise(self) -> int | None:
        if not self.level_max_noise:
            return None
        return max(self.level_max_noise)

    def kv(self, with_time: bool = True) -> str:
        lines = [f"gates.total={self.total_gates}"]
        lines += [f"gates.{k}={v}" for k, v in self.counts.items()]
        lines.append(f"depth={self.depth}")
        lines.append(f"jobs={self.parallelism}")
        if self.level_max_noise is not None:
            lines.append(f"noise.max={self.max_noise if self.max_noise is not None else 0}")
        for k, v in self.extra.items():
            lines.append(f"{k}={v}")
        if with_time:
            lines.append(f"wall_time_s={self.wall_time:.6f}")
        return "\n".join(lines)

    def table(self) -> str:
        lines = ["gate      count"]
        lines += [f"{k:<8} {v:>6}" for k, v in self.counts.items() if v]
        lines.append(f"{'total':<8} {self.total_gates:>6}")
        lines.append(f"depth {self.depth}, jobs {self.parallelism}, {self.wall_time * 1000:.1f} ms")
        if self.level_max_noise:
            lines.append(f"max noise {self.max_noise} (final level {self.level_max_noise[-1]})")
        return "\n".join(lines)


def _flatten_inputs(c: GateCircuit, inputs) -> list[Any]:
    if isinstance(inputs, Mapping):
        flat = []
        for grp in c.inputs:
            if grp.name not in inputs:
                raise CircuitError(f"missing input group {grp.name}")
            bits = list(inputs[grp.name])
            if len(bits) != grp.width:
                raise CircuitError(f"input {grp.name} needs {grp.width} bits, got {len(bits)}")
            flat.extend(bits)
        extra = set(inputs) - {g.name for g in c.inputs}
        if extra:
            raise CircuitError(f"unknown input groups: {sorted(extra)}")
        return flat
    flat = list(inputs)
    if len(flat) != c.num_input_wires:
        raise CircuitError(f"expected {c.num_input_wires} input bits, got {len(flat)}")
    return flat


def execute(c: GateCircuit, inputs: Mapping[str, Sequence[Any]] | Sequence[Any], backend: GateBackend,
            parallelism: int = 1, schedule: Schedule | None = None,
            shuffle_rng=None) -> tuple[dict[str, list[Any]], ExecStats]:
    """Run ``c`` on backend values; returns output group -> values and stats.

    ``inputs`` maps input group names to per-bit backend values (LSB first) or
    is one flat sequence in header order. ``shuffle_rng`` (anything with a
    ``shuffle`` method) randomizes the order of gates within each level.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be at least 1")
    start = time.perf_counter()
    sched = schedule or schedule_levels(c)
    values: list[Any] = [None] * c.num_wires
    values[: c.num_input_wires] = _flatten_inputs(c, inputs)
    ops = backend.dispatch()
    gates = c.gates
    base = c.num_input_wires
    track_noise = type(backend).noise is not GateBackend.noise
    level_noise: list[int] = []

    def run(ids: Sequence[int]):
        for gid in ids:
            g = gates[gid - base]
            values[gid] = ops[g.kind](*[values[o] for o in g.operands])

    pool = ThreadPoolExecutor(max_workers=parallelism) if parallelism > 1 else None
    try:
        for level in sched.levels:
            ids = list(level)
            if shuffle_rng is not None:
                shuffle_rng.shuffle(ids)
            if pool is None or len(ids) < MIN_PARALLEL_LEVEL:
                run(ids)
            else:
                step = -(-len(ids) // parallelism)
                futures = [pool.submit(run, ids[i:i + step]) for i in range(0, len(ids), step)]
                for fut in futures:
                    fut.result()  # barrier; re-raises backend errors
            if track_noise:
                level_noise.append(max(backend.noise(values[gid]) for gid in ids))
    finally:
        if pool is not None:
            pool.shutdown()
    outputs = {grp.name: [values[w] for w in grp.wires] for grp in c.outputs}
    counts = {k: 0 for k in GATE_ARITY}
    for g in gates:
        counts[g.kind] += 1
    stats = ExecStats(counts, sched.depth, time.perf_counter() - start,
                      level_noise if track_noise else None, parallelism)
    return outputs, stats
