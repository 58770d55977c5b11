"""
templates.py
------------

Modelos de tarefa: gramática de therbligs, papéis dos objetos e perfil do Use.
Task templates: therblig grammar, object roles and Use profile.

Cada fase é (therblig, faixa de duração em passos para uma demo de 600 passos,
papel alvo). Fases de transporte se movem até o papel alvo (None = posição de
repouso); Grasp/Use/Release registram o papel onde acontecem.
Each phase is (therblig, duration range in steps for a 600-step demo, target
role). Transport phases move to the target role (None = home pose);
Grasp/Use/Release register the role they act on.

Papéis / Roles:
    source, destination, tool  ->  obj_0, obj_1, ... na ordem de `roles`
                                   in `roles` order
"""

from dataclasses import dataclass, field
from typing import Optional

from contracts.domain_contracts import ANCHOR_THERBLIGS, DEFAULT_DURATION_STEPS, Therblig
from domain.therbligs import check_grammar
from utils.errors import ContractError

R = Therblig.REST
TE = Therblig.TRANSPORT_EMPTY
D = Therblig.DELAY
G = Therblig.GRASP
TL = Therblig.TRANSPORT_LOADED
U = Therblig.USE
RL = Therblig.RELEASE

MOTION_THERBLIGS = (TE, TL)


@dataclass(frozen=True)
class Phase:
    therblig: Therblig
    duration: tuple[int, int]
    target: Optional[str] = None


@dataclass(frozen=True)
class UseProfile:
    amplitude: float = 0.01  # m, along the object's long axis
    cycles: int = 2
    force: float = 4.0  # N, peak pressing force
    tilt: float = 0.0  # rad, roll bump over the phase


@dataclass(frozen=True)
class TaskTemplate:
    name: str
    roles: tuple[str, ...]
    phases: tuple[Phase, ...]
    use_profile: UseProfile = field(default_factory=UseProfile)
    split: str = "train"

    def __post_init__(self):
        problems = check_grammar([int(p.therblig) for p in self.phases])
        if problems:
            raise ContractError(f"template {self.name}: invalid grammar: {problems}")
        location: Optional[str] = None
        for i, phase in enumerate(self.phases):
            if phase.target is not None and phase.target not in self.roles:
                raise ContractError(f"template {self.name}: phase {i} targets unknown role {phase.target}")
            if phase.therblig in MOTION_THERBLIGS:
                location = phase.target
            elif phase.therblig in ANCHOR_THERBLIGS and phase.target != location:
                raise ContractError(
                    f"template {self.name}: {phase.therblig.name} at phase {i} acts on {phase.target} "
                    f"but the arm is at {location}"
                )

    @property
    def grammar(self) -> list[tuple[Therblig, tuple[int, int]]]:
        return [(p.therblig, p.duration) for p in self.phases]

    @property
    def waypoint_spec(self) -> list[tuple[Therblig, Optional[str]]]:
        return [(p.therblig, p.target) for p in self.phases]

    def role_object_id(self, role: str) -> str:
        return f"obj_{self.roles.index(role)}"

    @property
    def num_task_objects(self) -> int:
        return len(self.roles)

    def min_steps(self, duration_steps: int = DEFAULT_DURATION_STEPS) -> int:
        return sum(scale_range(p.duration, duration_steps)[0] for p in self.phases)


def scale_range(duration: tuple[int, int], duration_steps: int) -> tuple[int, int]:
    """Scale a 600-step duration range to `duration_steps`, keeping at least one step."""
    factor = duration_steps / DEFAULT_DURATION_STEPS
    lo = max(1, int(round(duration[0] * factor)))
    hi = max(lo, int(round(duration[1] * factor)))
    return lo, hi


# -------------------------------
# Training templates (offline tasks)
# -------------------------------

PICK_AND_PLACE = TaskTemplate(
    name="pick_and_place",
    roles=("source", "destination"),
    phases=(
        Phase(R, (40, 70)),
        Phase(TE, (70, 100), "source"),
        Phase(G, (25, 40), "source"),
        Phase(D, (15, 30)),
        Phase(TL, (90, 130), "destination"),
        Phase(RL, (25, 40), "destination"),
        Phase(TE, (70, 100)),
        Phase(R, (40, 70)),
    ),
    use_profile=UseProfile(amplitude=0.0, cycles=1, force=0.0),
)

CROSSBEAM_CUTTING = TaskTemplate(
    name="crossbeam_cutting",
    roles=("tool", "source"),
    phases=(
        Phase(R, (30, 50)),
        Phase(TE, (55, 80), "tool"),
        Phase(G, (20, 35), "tool"),
        Phase(TL, (60, 90), "source"),
        Phase(U, (80, 120), "source"),
        Phase(TL, (60, 90), "tool"),
        Phase(RL, (20, 35), "tool"),
        Phase(TE, (55, 80)),
        Phase(R, (30, 50)),
    ),
    use_profile=UseProfile(amplitude=0.02, cycles=4, force=6.0),
)

BRICKS_GLUING = TaskTemplate(
    name="bricks_gluing",
    roles=("source", "destination"),
    phases=(
        Phase(R, (30, 50)),
        Phase(TE, (60, 90), "source"),
        Phase(G, (20, 35), "source"),
        Phase(TL, (80, 110), "destination"),
        Phase(U, (50, 80), "destination"),
        Phase(D, (20, 40)),
        Phase(RL, (20, 35), "destination"),
        Phase(TE, (60, 90)),
        Phase(R, (30, 50)),
    ),
    use_profile=UseProfile(amplitude=0.005, cycles=1, force=8.0),
)

TISSUE_SWEEPING = TaskTemplate(
    name="tissue_sweeping",
    roles=("tool", "source"),
    phases=(
        Phase(R, (30, 50)),
        Phase(TE, (55, 80), "tool"),
        Phase(G, (20, 35), "tool"),
        Phase(TL, (60, 90), "source"),
        Phase(U, (90, 130), "source"),
        Phase(TL, (60, 90), "tool"),
        Phase(RL, (20, 35), "tool"),
        Phase(TE, (55, 80)),
        Phase(R, (30, 50)),
    ),
    use_profile=UseProfile(amplitude=0.03, cycles=3, force=2.0),
)

SURFACE_WIPING = TaskTemplate(
    name="surface_wiping",
    roles=("tool", "source"),
    phases=(
        Phase(R, (30, 50)),
        Phase(TE, (55, 80), "tool"),
        Phase(G, (20, 35), "tool"),
        Phase(TL, (60, 90), "source"),
        Phase(U, (100, 140), "source"),
        Phase(TL, (60, 90), "tool"),
        Phase(RL, (20, 35), "tool"),
        Phase(TE, (55, 80)),
        Phase(R, (25, 45)),
    ),
    use_profile=UseProfile(amplitude=0.025, cycles=5, force=3.0),
)

CUP_POURING = TaskTemplate(
    name="cup_pouring",
    roles=("source", "destination"),
    phases=(
        Phase(R, (30, 50)),
        Phase(TE, (60, 90), "source"),
        Phase(G, (20, 35), "source"),
        Phase(TL, (70, 100), "destination"),
        Phase(U, (60, 90), "destination"),
        Phase(D, (15, 30)),
        Phase(TL, (70, 100), "source"),
        Phase(RL, (20, 35), "source"),
        Phase(TE, (50, 80)),
        Phase(R, (25, 45)),
    ),
    use_profile=UseProfile(amplitude=0.0, cycles=1, force=1.0, tilt=1.2),
)

# -------------------------------
# Test templates (unseen online tasks)
# -------------------------------

BOARD_ROLLING = TaskTemplate(
    name="board_rolling",
    roles=("tool", "source"),
    phases=(
        Phase(R, (30, 50)),
        Phase(TE, (55, 80), "tool"),
        Phase(G, (20, 35), "tool"),
        Phase(TL, (60, 90), "source"),
        Phase(U, (90, 130), "source"),
        Phase(TL, (60, 90), "tool"),
        Phase(RL, (20, 35), "tool"),
        Phase(TE, (55, 80)),
        Phase(R, (30, 50)),
    ),
    use_profile=UseProfile(amplitude=0.03, cycles=3, force=5.0),
    split="test",
)

FOAM_BLOCK_FLIPPING = TaskTemplate(
    name="foam_block_flipping",
    roles=("source", "destination"),
    phases=(
        Phase(R, (30, 50)),
        Phase(TE, (60, 90), "source"),
        Phase(G, (20, 35), "source"),
        Phase(U, (50, 80), "source"),
        Phase(TL, (80, 110), "destination"),
        Phase(RL, (20, 35), "destination"),
        Phase(TE, (60, 90)),
        Phase(R, (30, 50)),
    ),
    use_profile=UseProfile(amplitude=0.0, cycles=1, force=1.5, tilt=1.5),
    split="test",
)

PLATE_SCRUBBING = TaskTemplate(
    name="plate_scrubbing",
    roles=("tool", "source"),
    phases=(
        Phase(R, (30, 50)),
        Phase(TE, (55, 80), "tool"),
        Phase(G, (20, 35), "tool"),
        Phase(TL, (60, 90), "source"),
        Phase(U, (100, 140), "source"),
        Phase(TL, (60, 90), "tool"),
        Phase(RL, (20, 35), "tool"),
        Phase(TE, (55, 80)),
        Phase(R, (25, 45)),
    ),
    use_profile=UseProfile(amplitude=0.015, cycles=6, force=4.0),
    split="test",
)

SPOON_TILTING = TaskTemplate(
    name="spoon_tilting",
    roles=("source", "destination"),
    phases=(
        Phase(R, (30, 50)),
        Phase(TE, (60, 90), "source"),
        Phase(G, (20, 35), "source"),
        Phase(TL, (70, 100), "destination"),
        Phase(U, (50, 80), "destination"),
        Phase(RL, (20, 35), "destination"),
        Phase(TE, (60, 90)),
        Phase(R, (30, 50)),
    ),
    use_profile=UseProfile(amplitude=0.0, cycles=1, force=0.8, tilt=0.9),
    split="test",
)

PAPER_STAMPING = TaskTemplate(
    name="paper_stamping",
    roles=("tool", "source"),
    phases=(
        Phase(R, (30, 50)),
        Phase(TE, (55, 80), "tool"),
        Phase(G, (20, 35), "tool"),
        Phase(TL, (60, 90), "source"),
        Phase(U, (40, 60), "source"),
        Phase(TL, (60, 90), "tool"),
        Phase(RL, (20, 35), "tool"),
        Phase(TE, (55, 80)),
        Phase(R, (30, 50)),
    ),
    use_profile=UseProfile(amplitude=0.0, cycles=2, force=10.0),
    split="test",
)

TRAINING_TEMPLATES: tuple[TaskTemplate, ...] = (
    PICK_AND_PLACE,
    CROSSBEAM_CUTTING,
    BRICKS_GLUING,
    TISSUE_SWEEPING,
    SURFACE_WIPING,
    CUP_POURING,
)

TEST_TEMPLATES: tuple[TaskTemplate, ...] = (
    BOARD_ROLLING,
    FOAM_BLOCK_FLIPPING,
    PLATE_SCRUBBING,
    SPOON_TILTING,
    PAPER_STAMPING,
)

ALL_TEMPLATES = {t.name: t for t in TRAINING_TEMPLATES + TEST_TEMPLATES}


def get_template(name: str) -> TaskTemplate:
    try:
        return ALL_TEMPLATES[name]
    except KeyError:
        raise ContractError(f"unknown task template {name!r}; known: {sorted(ALL_TEMPLATES)}") from None


def resolve_templates(names) -> list[TaskTemplate]:
    """Accept template names or the groups `train`, `test`, `all`."""
    if isinstance(names, str):
        names = [n.strip() for n in names.split(",") if n.strip()]
    out: list[TaskTemplate] = []
    for name in names:
        if name == "train":
            out.extend(TRAINING_TEMPLATES)
        elif name == "test":
            out.extend(TEST_TEMPLATES)
        elif name == "all":
            out.extend(TRAINING_TEMPLATES + TEST_TEMPLATES)
        else:
            out.append(get_template(name))
    if not out:
        raise ContractError("at least one task template is required")
    return out
