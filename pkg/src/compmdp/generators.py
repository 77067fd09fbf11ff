"""Benchmark families written out in the component and diagram text formats.

* ``patrol``: tasks -> rooms -> floors -> buildings -> neighbourhood. A floor
  is a corridor loop: a lobby feeds a line of door/room segments and a guard
  either leaves or sends the patrol round again (a traced diagram).
* ``wholesale``: bidirectional supply chain. Goods move rightward through
  stages, returns travel leftward, so every ``;`` between stages closes loops.
* ``packets``: a 100-step transmission chain per batch and a 50-batch upper
  layer mixing a few channel variants; batches can be frozen.

The degree of identification controls how many names refer to identical
definitions: ``high`` uses one name per definition, ``mid`` two copies of the
whole hierarchy, ``low`` three (four for wholesale). The top expression cycles
through the copies, so every copy is used and the solved values do not change.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dsl import format_real, parse_component, parse_diagram, Program

DI_COPIES = {"high": 1, "mid": 2, "low": 3}


def di_copies(di: str, family: str) -> int:
    if di not in DI_COPIES:
        raise ValueError(f"unknown degree of identification {di!r}")
    if di == "low" and family == "wholesale":
        return 4
    return DI_COPIES[di]


def resolve_seed(seed: int) -> int:
    env = os.environ.get("COMPMDP_SEED")
    return int(env) if env not in (None, "") else seed


@dataclass
class Generated:
    files: dict[str, str] = field(default_factory=dict)
    diagram: str = ""

    def write(self, out_dir: str | Path) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for name, text in self.files.items():
            p = out / name
            p.write_text(text, encoding="utf-8")
            paths.append(p)
        return paths

    def loader(self):
        cache = {}

        def load(path: str):
            if path not in cache:
                cache[path] = parse_component(self.files[path])
            return cache[path]

        return load

    def program(self) -> Program:
        return parse_diagram(self.files[self.diagram], loader=self.loader())

    def binding_count(self) -> int:
        return sum(line.startswith("let ") for line in self.files[self.diagram].splitlines())


def _rotate(names: list[str], copies: int) -> str:
    return " ; ".join(f"{n}{_sfx(i % copies, copies)}" for i, n in enumerate(names))


def _sfx(c: int, copies: int) -> str:
    return "" if copies == 1 else f"_{c + 1}"


def _need(count: int, copies: int, what: str) -> None:
    if count < copies:
        raise ValueError(f"{copies} copies need at least {copies} {what} at the top level, got {count}")


# ------------------------------------------------------------------ patrol

DOOR = """mdp door {
  arity 1 -> 2
  actions [enter, skip]
  positions {
    d reward 0
    b reward 0
  }
  entry 1 -> d
  trans d enter { exit 1: 0.8, b: 0.2 }
  trans d skip { b: 1 }
  trans b enter { exit 2: 1 }
}
"""

MERGE = """mdp merge {
  arity 2 -> 1
  actions [go]
  positions { j reward 0 }
  entry 1 -> j 2 -> j
  trans j go { exit 1: 1 }
}
"""

LOBBY = """mdp lobby {
  arity 2 -> 2
  actions [go]
  positions { l reward 1 }
  entry 1 -> l 2 -> l
  trans l go { exit 2: 1 }
}
"""

GUARD = """mdp guard {
  arity 2 -> 2
  actions [leave, recheck]
  positions {
    g reward 0
    h reward 0
  }
  entry 1 -> g 2 -> g
  trans g leave { h: 1 }
  trans g recheck { exit 1: 0.5, h: 0.5 }
  trans h leave { exit 2: 1 }
}
"""


def task_component(reward: float) -> str:
    return (
        "mdp task {\n"
        "  arity 1 -> 1\n"
        "  actions [go]\n"
        f"  positions {{ q reward {format_real(reward)} }}\n"
        "  entry 1 -> q\n"
        "  trans q go { q: 0.2, exit 1: 0.8 }\n"
        "}\n"
    )


def generate_patrol(
    tasks: int = 2,
    rooms: int = 2,
    floors: int = 1,
    buildings: int = 1,
    task_types: int = 3,
    room_types: int = 2,
    di: str = "high",
    seed: int = 0,
) -> Generated:
    for v, what in ((tasks, "tasks"), (rooms, "rooms"), (floors, "floors"), (buildings, "buildings")):
        if v < 1:
            raise ValueError(f"{what} must be at least 1")
    copies = di_copies(di, "patrol")
    _need(buildings, copies, "buildings")
    rng = np.random.default_rng(resolve_seed(seed))
    g = Generated(diagram="patrol.diag")
    rewards = rng.integers(1, 10, size=task_types)
    for t in range(task_types):
        g.files[f"task{t + 1}.omdp"] = task_component(float(rewards[t]))
    g.files.update({"door.omdp": DOOR, "merge.omdp": MERGE, "lobby.omdp": LOBBY, "guard.omdp": GUARD})
    room_types = min(room_types, rooms)
    layouts = [rng.integers(1, task_types + 1, size=tasks) for _ in range(room_types)]

    lines = ["# patrol benchmark: task -> room -> floor -> building -> neighbourhood"]
    for c in range(copies):
        s = _sfx(c, copies)
        for t in range(task_types):
            lines.append(f'let Task{t + 1}{s} = load "task{t + 1}.omdp";')
        for name in ("Door", "Merge", "Lobby", "Guard"):
            lines.append(f'let {name}{s} = load "{name.lower()}.omdp";')
        for r, layout in enumerate(layouts):
            body = " ; ".join(f"Task{k}{s}" for k in layout)
            lines.append(f"let Room{r + 1}{s} = {body};")
            lines.append(f"let Seg{r + 1}{s} = Door{s} ; (Room{r + 1}{s} (+) id[1]) ; Merge{s};")
        segs = " ; ".join(f"Seg{(i % room_types) + 1}{s}" for i in range(rooms))
        lines.append(f"let Floor{s} = tr[1](Lobby{s} ; (id[1] (+) {segs}) ; Guard{s});")
        lines.append(f"let Building{s} = {' ; '.join([f'Floor{s}'] * floors)};")
    lines.append(f"solve {_rotate(['Building'] * buildings, copies)} entrance 1 exit 1")
    g.files[g.diagram] = "\n".join(lines) + "\n"
    return g


def patrol_positions(tasks: int, rooms: int, floors: int, buildings: int) -> int:
    """Flattened position count of :func:`generate_patrol` output."""
    per_floor = 3 + rooms * (tasks + 3)
    return buildings * floors * per_floor


# --------------------------------------------------------------- wholesale

SOURCE = """omdp source {
  arity (1,0) -> (1,1)
  actions [fast, inspect]
  positions {
    s1 reward 1
    s2 reward 0
  }
  entry 1 -> s1 2 -> s1
  trans s1 fast { s2: 1 }
  trans s1 inspect { s1: 0.5, s2: 0.5 }
  trans s2 fast { exit 1: 1 }
}
"""

SINK = """omdp sink {
  arity (1,1) -> (1,0)
  actions [fast, inspect]
  positions {
    d reward 1
    z reward 0
  }
  entry 1 -> d
  trans d fast { exit 1: 0.8, z: 0.2 }
  trans z fast { exit 2: 1 }
}
"""


def stage_component(gain: float, fix: float, ship: float) -> str:
    return (
        "omdp stage {\n"
        "  arity (1,1) -> (1,1)\n"
        "  actions [fast, inspect]\n"
        "  positions {\n"
        f"    w reward {format_real(gain)}\n"
        "    v reward 0\n"
        f"    r reward {format_real(fix)}\n"
        "  }\n"
        "  entry 1 -> w 2 -> r\n"
        "  trans w fast { v: 1 }\n"
        "  trans w inspect { w: 0.5, v: 0.5 }\n"
        f"  trans v fast {{ exit 1: {format_real(ship)}, r: {format_real(1 - ship)} }}\n"
        "  trans r fast { exit 2: 0.75, w: 0.25 }\n"
        "  trans r inspect { w: 1 }\n"
        "}\n"
    )


def generate_wholesale(
    stages: int = 2,
    hubs: int = 2,
    regions: int = 4,
    stage_types: int = 2,
    di: str = "high",
    seed: int = 0,
) -> Generated:
    for v, what in ((stages, "stages"), (hubs, "hubs"), (regions, "regions")):
        if v < 1:
            raise ValueError(f"{what} must be at least 1")
    copies = di_copies(di, "wholesale")
    _need(regions, copies, "regions")
    rng = np.random.default_rng(resolve_seed(seed))
    g = Generated(diagram="wholesale.diag")
    g.files["source.omdp"] = SOURCE
    g.files["sink.omdp"] = SINK
    for k in range(stage_types):
        gain = float(rng.integers(1, 5))
        fix = float(rng.integers(0, 4))
        ship = float(rng.choice([0.75, 0.875]))
        g.files[f"stage{k + 1}.omdp"] = stage_component(gain, fix, ship)
    lines = ["# wholesale benchmark: stage -> hub -> region -> network (bidirectional)"]
    for c in range(copies):
        s = _sfx(c, copies)
        for k in range(stage_types):
            lines.append(f'let Stage{k + 1}{s} = load "stage{k + 1}.omdp";')
        lines.append(f"let Hub{s} = {' ; '.join(f'Stage{(i % stage_types) + 1}{s}' for i in range(stages))};")
        lines.append(f"let Region{s} = {' ; '.join([f'Hub{s}'] * hubs)};")
    lines.append('let Source = load "source.omdp";')
    lines.append('let Sink = load "sink.omdp";')
    lines.append(f"solve Source ; {_rotate(['Region'] * regions, copies)} ; Sink entrance 1 exit 1")
    g.files[g.diagram] = "\n".join(lines) + "\n"
    return g


# ----------------------------------------------------------------- packets


def packet_component(fast_ok: float, slow_ok: float, reward: float, ack: float) -> str:
    return (
        "mdp packet {\n"
        "  arity 1 -> 1\n"
        "  actions [fast, slow]\n"
        "  positions {\n"
        f"    t reward {format_real(reward)}\n"
        "    w reward 0\n"
        "  }\n"
        "  entry 1 -> t\n"
        f"  trans t fast {{ w: {format_real(fast_ok)}, t: {format_real(1 - fast_ok)} }}\n"
        f"  trans t slow {{ w: {format_real(slow_ok)}, t: {format_real(1 - slow_ok)} }}\n"
        f"  trans w fast {{ exit 1: {format_real(ack)}, t: {format_real(1 - ack)} }}\n"
        "}\n"
    )


def generate_packets(
    steps: int = 100,
    blocks: int = 50,
    variants: int = 3,
    fz: str = "none",
    di: str = "high",
    seed: int = 0,
) -> Generated:
    if not 1 <= variants:
        raise ValueError("variants must be at least 1")
    if fz not in ("none", "int"):
        raise ValueError("fz must be 'none' or 'int'")
    copies = di_copies(di, "packets")
    _need(blocks, copies, "blocks")
    rng = np.random.default_rng(resolve_seed(seed))
    g = Generated(diagram="packets.diag")
    for v in range(variants):
        fast_ok = float(rng.choice([0.75, 0.875]))
        slow_ok = float(rng.choice([0.25, 0.5]))
        reward = float(rng.integers(1, 4))
        ack = float(rng.choice([0.75, 0.875, 0.9375]))
        g.files[f"packet{v + 1}.omdp"] = packet_component(fast_ok, slow_ok, reward, ack)
    order = rng.integers(1, variants + 1, size=blocks)
    # block i uses copy i % copies. Runs of 6 equal variants cover every copy
    # for 1, 2 or 3 copies, so every DI setting uses every definition while the
    # block sequence itself stays the same across DI settings.
    cover = min(blocks, 6 * variants)
    order[:cover] = [(i // 6) % variants + 1 for i in range(cover)]
    lines = ["# packets benchmark: transmission chains (lower) and block sequence (upper)"]
    for c in range(copies):
        s = _sfx(c, copies)
        for v in range(variants):
            lines.append(f'let Packet{v + 1}{s} = load "packet{v + 1}.omdp";')
            chain = " ; ".join([f"Packet{v + 1}{s}"] * steps)
            if fz == "int":
                chain = f"freeze({chain})"
            lines.append(f"let Batch{v + 1}{s} = {chain};")
    top = " ; ".join(f"Batch{k}{_sfx(i % copies, copies)}" for i, k in enumerate(order))
    lines.append(f"solve {top} entrance 1 exit 1")
    g.files[g.diagram] = "\n".join(lines) + "\n"
    return g


FAMILIES = {"patrol": generate_patrol, "wholesale": generate_wholesale, "packets": generate_packets}
