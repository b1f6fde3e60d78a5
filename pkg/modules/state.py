"""
Game State Module

Positions of the target and all agents, their liveness, and the game clock.
Agents are addressed by 0-based index; A_1 is attackers[0].
"""

import logging
from dataclasses import dataclass, replace
from typing import Iterable, List, Optional, Sequence, Tuple

from modules.geom import Point2

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AttackerState:
    position: Point2
    active: bool = True
    final_time: Optional[float] = None


@dataclass(frozen=True)
class DefenderState:
    position: Point2
    active: bool = True


@dataclass(frozen=True)
class GameState:
    """
    Snapshot of the game. Inactive agents keep the position where they left
    play; attackers also keep the time they left.
    """
    target: Point2
    attackers: Tuple[AttackerState, ...]
    defenders: Tuple[DefenderState, ...]
    clock: float = 0.0

    @classmethod
    def from_positions(
        cls,
        target: Point2,
        attackers: Sequence[Point2],
        defenders: Sequence[Point2],
        clock: float = 0.0
    ) -> "GameState":
        return cls(
            target=target,
            attackers=tuple(AttackerState(p) for p in attackers),
            defenders=tuple(DefenderState(p) for p in defenders),
            clock=clock,
        )

    # -------------------------------------------------------------------------
    # Accessors
    # -------------------------------------------------------------------------

    def attacker(self, i: int) -> Point2:
        return self.attackers[i].position

    def defender(self, j: int) -> Point2:
        return self.defenders[j].position

    def active_attackers(self) -> List[int]:
        return [i for i, a in enumerate(self.attackers) if a.active]

    def active_defenders(self) -> List[int]:
        return [j for j, d in enumerate(self.defenders) if d.active]

    # -------------------------------------------------------------------------
    # Updates (return new states)
    # -------------------------------------------------------------------------

    def with_positions(
        self,
        attackers: Iterable[Point2],
        defenders: Iterable[Point2],
        clock: float
    ) -> "GameState":
        """Move active agents; inactive agents keep their frozen positions"""
        new_attackers = tuple(
            replace(a, position=p) if a.active else a
            for a, p in zip(self.attackers, attackers)
        )
        new_defenders = tuple(
            replace(d, position=p) if d.active else d
            for d, p in zip(self.defenders, defenders)
        )
        return replace(self, attackers=new_attackers, defenders=new_defenders, clock=clock)

    def remove_attacker(self, i: int, position: Optional[Point2] = None) -> "GameState":
        attackers = list(self.attackers)
        a = attackers[i]
        attackers[i] = AttackerState(
            position=position if position is not None else a.position,
            active=False,
            final_time=self.clock,
        )
        return replace(self, attackers=tuple(attackers))

    def remove_defender(self, j: int) -> "GameState":
        defenders = list(self.defenders)
        defenders[j] = replace(defenders[j], active=False)
        return replace(self, defenders=tuple(defenders))


@dataclass(frozen=True)
class Controls:
    """Unit-bounded controls for every agent, indexed like GameState"""
    attackers: Tuple[Point2, ...]
    defenders: Tuple[Point2, ...]

    @classmethod
    def zeros(cls, n_attackers: int, n_defenders: int) -> "Controls":
        zero = Point2(0.0, 0.0)
        return cls((zero,) * n_attackers, (zero,) * n_defenders)
