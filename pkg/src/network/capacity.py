"""
Measurement-unit capacity and switch-port accounting.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.exceptions import ConstraintViolation, InvalidParameters

logger = logging.getLogger(__name__)

MuType = Tuple[int, int]

# Published unit capacities that differ from the formula
PUBLISHED_CAPACITY: Dict[MuType, int] = {(9, 8): 28}

BRUTEFORCE_MAX_USERS = 12


@dataclass(frozen=True)
class MuSpec:
    """An n-user measurement unit with i extended ports per user."""
    n_users: int
    ports_per_user: int

    def __post_init__(self) -> None:
        n, i = self.n_users, self.ports_per_user
        if n < 2:
            raise InvalidParameters(f"A measurement unit needs at least 2 users, got {n}")
        if not 1 <= i <= n - 1:
            raise InvalidParameters(f"Ports per user must lie in [1, {n - 1}], got {i}")

    @property
    def key(self) -> MuType:
        return self.n_users, self.ports_per_user

    @property
    def capacity(self) -> int:
        return mu_capacity(self)

    @property
    def label(self) -> str:
        if self.n_users == 2:
            return 'M2'
        return f"M{self.n_users},{self.ports_per_user}"


def mu_capacity(mu: MuSpec) -> int:
    """Concurrent user pairs of one unit: min(floor(n i / 2), C(n, 2))."""
    n, i = mu.n_users, mu.ports_per_user
    if n == 2:
        return 1
    return min(n * i // 2, n * (n - 1) // 2)


def max_pairs_bruteforce(mu: MuSpec) -> int:
    """
    Largest set of distinct user pairs with every user in at most i pairs.

    Exhaustive branch and bound over the edges of the complete graph K_n.

    Raises:
        InvalidParameters: For units with more than 12 users
    """
    n, cap = mu.n_users, mu.ports_per_user
    if n > BRUTEFORCE_MAX_USERS:
        raise InvalidParameters(
            f"Exhaustive search is limited to {BRUTEFORCE_MAX_USERS} users, got {n}"
        )
    # Circulant order: difference classes 1, 2, ... so that taking edges early
    # builds near-regular subgraphs
    edges = []
    for d in range(1, n // 2 + 1):
        for v in range(n):
            edge = tuple(sorted((v, (v + d) % n)))
            if edge not in edges:
                edges.append(edge)
    # incident[e, v]: edges with index >= e touching v
    incident = np.zeros((len(edges) + 1, n), dtype=int)
    for e in range(len(edges) - 1, -1, -1):
        incident[e] = incident[e + 1]
        incident[e, edges[e][0]] += 1
        incident[e, edges[e][1]] += 1

    residual = [cap] * n
    ceiling = min(len(edges), n * cap // 2)
    best = 0

    def bound(e: int) -> int:
        return sum(min(residual[v], incident[e, v]) for v in range(n)) // 2

    def search(e: int, count: int) -> bool:
        nonlocal best
        if count > best:
            best = count
            if best == ceiling:
                return True
        if e == len(edges) or count + bound(e) <= best:
            return False
        u, v = edges[e]
        if residual[u] and residual[v]:
            residual[u] -= 1
            residual[v] -= 1
            done = search(e + 1, count + 1)
            residual[u] += 1
            residual[v] += 1
            if done:
                return True
        return search(e + 1, count)

    search(0, 0)
    return best


@dataclass
class MuInventory:
    """Measurement units installed behind an N x N optical switch."""
    m2: int = 0
    multi: Dict[MuType, int] = field(default_factory=dict)
    switch_ports: int = 0

    def __post_init__(self) -> None:
        if self.m2 < 0 or self.switch_ports < 0:
            raise InvalidParameters("Unit counts and switch ports must be >= 0")
        normalized = {}
        for key, count in self.multi.items():
            n, i = int(key[0]), int(key[1])
            if n < 3 or not 2 <= i <= n - 1:
                raise InvalidParameters(
                    f"Multi-user units need n >= 3 and 2 <= i <= n - 1, got ({n}, {i})"
                )
            if count < 0:
                raise InvalidParameters(f"Unit count for ({n}, {i}) must be >= 0")
            if count:
                normalized[(n, i)] = normalized.get((n, i), 0) + int(count)
        self.multi = dict(sorted(normalized.items()))

    def units(self) -> List[Tuple[str, MuSpec]]:
        """Every installed unit with a stable identifier such as 'M9,8#0'."""
        result = [(f"M2#{k}", MuSpec(2, 1)) for k in range(self.m2)]
        for (n, i), count in self.multi.items():
            spec = MuSpec(n, i)
            result.extend((f"{spec.label}#{k}", spec) for k in range(count))
        return result

    def unit_map(self) -> Dict[str, MuSpec]:
        return dict(self.units())

    def with_count(self, key: MuType, count: int) -> 'MuInventory':
        if key == (2, 1):
            return MuInventory(count, dict(self.multi), self.switch_ports)
        multi = dict(self.multi)
        multi[key] = count
        return MuInventory(self.m2, multi, self.switch_ports)

    def to_dict(self) -> dict:
        return {
            'm2': self.m2,
            'multi': [{'n': n, 'i': i, 'count': c} for (n, i), c in self.multi.items()],
            'switch_ports': self.switch_ports,
        }


def ports_used(inv: MuInventory) -> int:
    """2 M2 + sum of n M_{n,i}."""
    return 2 * inv.m2 + sum(n * count for (n, _), count in inv.multi.items())


def check_ports(inv: MuInventory, strict: bool = False) -> int:
    """
    Check the switch-port constraint.

    Inclusive (<= N) by default, strict (< N) on request.

    Returns:
        Number of ports used

    Raises:
        ConstraintViolation: If the units need more ports than allowed
    """
    used = ports_used(inv)
    ok = used < inv.switch_ports if strict else used <= inv.switch_ports
    if not ok:
        raise ConstraintViolation(used, inv.switch_ports, strict)
    if used == inv.switch_ports:
        logger.warning(
            f"Units occupy all {used} switch ports; the strict constraint would reject this"
        )
    return used


def total_capacity(inv: MuInventory, strict: bool = False, published_values: bool = False) -> int:
    """
    Maximum concurrent user pairs of an inventory.

    Args:
        inv: Installed units
        strict: Use the strict port constraint
        published_values: Substitute the published unit capacities

    Raises:
        ConstraintViolation: If the port constraint fails
    """
    check_ports(inv, strict)
    total = 0
    for _, spec in inv.units():
        if published_values and spec.key in PUBLISHED_CAPACITY:
            total += PUBLISHED_CAPACITY[spec.key]
        else:
            total += mu_capacity(spec)
    return total


def capacity_breakdown(inv: MuInventory) -> List[dict]:
    """Per unit type: count, formula and oracle capacity and any published value."""
    rows = []
    types = [((2, 1), inv.m2)] if inv.m2 else []
    types += list(inv.multi.items())
    for (n, i), count in types:
        spec = MuSpec(n, i)
        row = {
            'unit': spec.label,
            'n': n,
            'i': i,
            'count': count,
            'capacity': mu_capacity(spec),
            'oracle': max_pairs_bruteforce(spec) if n <= BRUTEFORCE_MAX_USERS else None,
            'published': PUBLISHED_CAPACITY.get((n, i)),
        }
        if row['published'] is not None and row['published'] != row['capacity']:
            logger.warning(
                f"{spec.label}: formula gives {row['capacity']} pairs, "
                f"the published figure lists {row['published']}"
            )
        rows.append(row)
    return rows


def whatif_inventories(
    mu_types: Sequence[MuType],
    switch_ports: int,
    max_each: Optional[int] = None,
    strict: bool = False,
    top: Optional[int] = None
) -> List[dict]:
    """
    Enumerate unit compositions that fit the switch, ranked by capacity.

    Args:
        mu_types: Candidate unit types; (2, 1) denotes the 2-user unit
        switch_ports: Switch size N
        max_each: Upper limit per type (defaults to what the ports allow)
        strict: Use the strict port constraint
        top: Keep only the best entries

    Returns:
        Rows with the inventory, its capacity and the ports used, sorted by
        capacity (descending), ports used and the counts themselves
    """
    types = sorted(set((int(n), int(i)) for n, i in mu_types))
    for n, i in types:
        MuSpec(n, i)
    limits = [
        switch_ports // n if max_each is None else min(max_each, switch_ports // n)
        for n, _ in types
    ]
    rows = []
    for counts in itertools.product(*(range(limit + 1) for limit in limits)):
        used = sum(n * c for (n, _), c in zip(types, counts))
        if (used >= switch_ports) if strict else (used > switch_ports):
            continue
        inv = MuInventory(switch_ports=switch_ports)
        for key, c in zip(types, counts):
            if c:
                inv = inv.with_count(key, c)
        capacity = sum(mu_capacity(spec) for _, spec in inv.units())
        rows.append({'inventory': inv, 'capacity': capacity, 'ports_used': used, 'counts': counts})
    rows.sort(key=lambda r: (-r['capacity'], r['ports_used'], tuple(-c for c in r['counts'])))
    return rows[:top] if top else rows
