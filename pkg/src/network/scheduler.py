"""
User-pair scheduling onto measurement units.
Each user is routed through the switch to at most one unit; pairs are served
inside a unit subject to its per-user port count.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx

from src.core.exceptions import InvalidParameters
from src.network.capacity import MuInventory, MuSpec, mu_capacity

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]

EXACT_USER_LIMIT = 12
DEFAULT_NODE_BUDGET = 200_000


@dataclass
class PairingPlan:
    """Requested pairs placed on units, and those left over."""
    assignments: List[Tuple[int, int, str]] = field(default_factory=list)
    unserved: List[Pair] = field(default_factory=list)
    method: str = 'exact'

    @property
    def served(self) -> int:
        return len(self.assignments)

    def pairs_by_unit(self) -> Dict[str, List[Pair]]:
        result: Dict[str, List[Pair]] = {}
        for a, b, mu_id in self.assignments:
            result.setdefault(mu_id, []).append((a, b))
        return result

    def to_dict(self) -> dict:
        return {
            'method': self.method,
            'served': self.served,
            'assignments': [{'user_a': a, 'user_b': b, 'mu_id': m} for a, b, m in self.assignments],
            'unserved': [list(p) for p in self.unserved],
        }


def normalize_requests(requests: Iterable[Sequence[int]]) -> List[Pair]:
    """Unordered, de-duplicated, sorted request pairs."""
    pairs = set()
    for request in requests:
        a, b = int(request[0]), int(request[1])
        if a == b:
            raise InvalidParameters(f"A user cannot be paired with itself ({a})")
        pairs.add((min(a, b), max(a, b)))
    return sorted(pairs)


def max_degree_subgraph(edges: Sequence[Pair], cap: int) -> List[Pair]:
    """
    Largest subset of edges with every vertex in at most ``cap`` of them.

    Reduces the degree-constrained subgraph problem to maximum-cardinality
    matching: each vertex gets ``cap`` copies and each edge a two-node gadget.
    """
    if not edges or cap <= 0:
        return []
    graph = nx.Graph()
    for k, (u, v) in enumerate(edges):
        end_u, end_v = ('e', k, 0), ('e', k, 1)
        graph.add_edge(end_u, end_v)
        for c in range(cap):
            graph.add_edge(end_u, ('v', u, c))
            graph.add_edge(end_v, ('v', v, c))
    matching = nx.max_weight_matching(graph, maxcardinality=True)
    partner = {}
    for x, y in matching:
        partner[x] = y
        partner[y] = x
    chosen = []
    for k, edge in enumerate(edges):
        ends = [partner.get(('e', k, side)) for side in (0, 1)]
        if all(end is not None and end[0] == 'v' for end in ends):
            chosen.append(edge)
    return sorted(chosen)


class _BudgetExceeded(Exception):
    pass


def _schedule_exact(
    requests: List[Pair],
    units: List[Tuple[str, MuSpec]],
    node_budget: int
) -> Tuple[List[Tuple[int, int, str]], bool]:
    """Branch and bound over requests; returns (best assignments, completed)."""
    ceiling = min(len(requests), sum(mu_capacity(spec) for _, spec in units))
    home: Dict[int, str] = {}
    members: Dict[str, Set[int]] = {mu_id: set() for mu_id, _ in units}
    degree: Dict[Tuple[str, int], int] = {}
    load: Dict[str, int] = {mu_id: 0 for mu_id, _ in units}
    current: List[Tuple[int, int, str]] = []
    best: List[Tuple[int, int, str]] = []
    nodes = 0

    def candidates(a: int, b: int) -> List[Tuple[str, MuSpec]]:
        fixed = {home[u] for u in (a, b) if u in home}
        if len(fixed) > 1:
            return []
        if fixed:
            mu_id = fixed.pop()
            return [(m, s) for m, s in units if m == mu_id]
        # Empty units of one type are interchangeable: try only the first
        seen_empty = set()
        result = []
        for mu_id, spec in units:
            if not members[mu_id]:
                if spec.key in seen_empty:
                    continue
                seen_empty.add(spec.key)
            result.append((mu_id, spec))
        return result

    def fits(a: int, b: int, mu_id: str, spec: MuSpec) -> bool:
        new_users = sum(1 for u in (a, b) if u not in home)
        if len(members[mu_id]) + new_users > spec.n_users:
            return False
        if load[mu_id] >= mu_capacity(spec):
            return False
        cap = spec.ports_per_user
        return degree.get((mu_id, a), 0) < cap and degree.get((mu_id, b), 0) < cap

    def place(a: int, b: int, mu_id: str) -> List[int]:
        added = [u for u in (a, b) if u not in home]
        for u in added:
            home[u] = mu_id
            members[mu_id].add(u)
        for u in (a, b):
            degree[(mu_id, u)] = degree.get((mu_id, u), 0) + 1
        load[mu_id] += 1
        current.append((a, b, mu_id))
        return added

    def remove(a: int, b: int, mu_id: str, added: List[int]) -> None:
        current.pop()
        load[mu_id] -= 1
        for u in (a, b):
            degree[(mu_id, u)] -= 1
        for u in added:
            del home[u]
            members[mu_id].discard(u)

    def search(k: int) -> bool:
        nonlocal best, nodes
        nodes += 1
        if nodes > node_budget:
            raise _BudgetExceeded()
        if len(current) > len(best):
            best = list(current)
            if len(best) == ceiling:
                return True
        if k == len(requests) or len(current) + (len(requests) - k) <= len(best):
            return False
        a, b = requests[k]
        for mu_id, spec in candidates(a, b):
            if fits(a, b, mu_id, spec):
                added = place(a, b, mu_id)
                done = search(k + 1)
                remove(a, b, mu_id, added)
                if done:
                    return True
        return search(k + 1)

    try:
        search(0)
    except _BudgetExceeded:
        return best, False
    return best, True


def _schedule_greedy(
    requests: List[Pair],
    units: List[Tuple[str, MuSpec]]
) -> List[Tuple[int, int, str]]:
    """Largest-capacity unit first; members grown from the best-connected user."""
    pending = set(requests)
    assigned: Set[int] = set()
    result = []
    ordered = sorted(
        units, key=lambda u: (-mu_capacity(u[1]), -u[1].n_users, u[0])
    )
    for mu_id, spec in ordered:
        free_pairs = [p for p in pending if p[0] not in assigned and p[1] not in assigned]
        if not free_pairs:
            break
        adjacency: Dict[int, Set[int]] = {}
        for a, b in free_pairs:
            adjacency.setdefault(a, set()).add(b)
            adjacency.setdefault(b, set()).add(a)
        seed = min(adjacency, key=lambda u: (-len(adjacency[u]), u))
        chosen = [seed]
        while len(chosen) < spec.n_users:
            options = [u for u in adjacency if u not in chosen]
            scored = [
                (-len(adjacency[u] & set(chosen)), -len(adjacency[u]), u) for u in options
            ]
            scored = [s for s in scored if s[0] < 0]
            if not scored:
                break
            chosen.append(min(scored)[2])
        members = set(chosen)
        edges = sorted(p for p in free_pairs if p[0] in members and p[1] in members)
        selected = max_degree_subgraph(edges, spec.ports_per_user)
        selected = selected[:mu_capacity(spec)]
        for a, b in selected:
            result.append((a, b, mu_id))
            pending.discard((a, b))
        # Users without a served pair stay available to later units
        assigned.update(u for pair in selected for u in pair)
    return result


def schedule(
    active: Iterable[int],
    requests: Iterable[Sequence[int]],
    inv: MuInventory,
    exact_limit: int = EXACT_USER_LIMIT,
    node_budget: int = DEFAULT_NODE_BUDGET
) -> PairingPlan:
    """
    Place requested user pairs on measurement units.

    Exact branch and bound when at most ``exact_limit`` users are involved,
    greedy largest-unit-first otherwise (and when the exact search exhausts
    its node budget). Ties are broken by user id.

    Args:
        active: Users currently connected
        requests: Pairs of users asking for a key
        inv: Installed units
        exact_limit: User count up to which the search is exhaustive
        node_budget: Search nodes before falling back to the greedy result

    Returns:
        PairingPlan with unserved requests listed

    Raises:
        InvalidParameters: If more users are active than the switch has ports
    """
    active = sorted(set(int(u) for u in active))
    if inv.switch_ports and len(active) > inv.switch_ports:
        raise InvalidParameters(
            f"{len(active)} active users exceed the {inv.switch_ports} switch ports"
        )
    pairs = normalize_requests(requests)
    active_set = set(active)
    usable = [p for p in pairs if p[0] in active_set and p[1] in active_set]
    inactive = [p for p in pairs if p not in usable]
    if inactive:
        logger.warning(f"{len(inactive)} requests involve inactive users")

    units = inv.units()
    users = {u for p in usable for u in p}
    method = 'exact'
    if len(users) <= exact_limit:
        assignments, complete = _schedule_exact(usable, units, node_budget)
        if not complete:
            logger.warning("Scheduling search budget exhausted; comparing with greedy plan")
            greedy = _schedule_greedy(usable, units)
            if len(greedy) > len(assignments):
                assignments, method = greedy, 'greedy'
            else:
                method = 'exact-budget'
    else:
        assignments, method = _schedule_greedy(usable, units), 'greedy'

    assignments = sorted(assignments)
    served = {(a, b) for a, b, _ in assignments}
    plan = PairingPlan(
        assignments=assignments,
        unserved=[p for p in pairs if p not in served],
        method=method,
    )
    logger.info(f"Plan ({method}): {plan.served} served, {len(plan.unserved)} unserved")
    return plan


def validate_plan(
    plan: PairingPlan,
    inv: MuInventory,
    requests: Optional[Iterable[Sequence[int]]] = None
) -> List[str]:
    """
    Check a plan against the unit and routing rules.

    Returns:
        List of violations; empty when the plan is valid
    """
    problems = []
    units = inv.unit_map()
    home: Dict[int, str] = {}
    seen: Set[Tuple[int, int, str]] = set()
    degree: Dict[Tuple[str, int], int] = {}
    members: Dict[str, Set[int]] = {}
    for a, b, mu_id in plan.assignments:
        if mu_id not in units:
            problems.append(f"unknown unit {mu_id}")
            continue
        if a == b:
            problems.append(f"self pair ({a}, {b})")
        key = (min(a, b), max(a, b), mu_id)
        if key in seen:
            problems.append(f"duplicate pair ({a}, {b}) in {mu_id}")
        seen.add(key)
        for u in (a, b):
            if home.setdefault(u, mu_id) != mu_id:
                problems.append(f"user {u} routed to {home[u]} and {mu_id}")
            degree[(mu_id, u)] = degree.get((mu_id, u), 0) + 1
            members.setdefault(mu_id, set()).add(u)
    for (mu_id, u), count in degree.items():
        if count > units[mu_id].ports_per_user:
            problems.append(f"user {u} in {count} pairs of {mu_id}")
    for mu_id, users in members.items():
        if len(users) > units[mu_id].n_users:
            problems.append(f"{mu_id} holds {len(users)} users")
    if requests is not None:
        wanted = set(normalize_requests(requests))
        served = {(min(a, b), max(a, b)) for a, b, _ in plan.assignments}
        if served - wanted:
            problems.append(f"unrequested pairs served: {sorted(served - wanted)}")
        if served | set(plan.unserved) != wanted:
            problems.append("served and unserved pairs do not cover the requests")
    return problems
