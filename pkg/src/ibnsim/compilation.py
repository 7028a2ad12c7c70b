"""Intent compilation, transactional installation, and uninstallation.

Compilation picks an implementation for a connectivity intent: a candidate
path (k-shortest order), a transmission mode (fewest slots that satisfies
rate and reach), and a first-fit contiguous spectrum block present on every
link of the path.  Installation reserves the chosen resources atomically
through the domain's reservation ledger: either every child resource is
booked or nothing changes.
"""

import enum
from dataclasses import dataclass, field
from typing import Optional

from .errors import (
    NotLocalSourceError,
    UnknownIntentError,
    WrongStateError,
)
from .intents import (
    ConnectivityIntent,
    IntentState,
    LightpathIntent,
    RemoteIntent,
    RouterPortIntent,
)
from .network import FiberLink, NetworkGraph, RouterView, TransmissionMode, link_key


class CompileOutcome(enum.Enum):
    COMPILED = "compiled"
    BLOCKED = "blocked"


class BlockReason(enum.Enum):
    NO_PATH = "no-path"
    NO_MODE = "no-mode"
    NO_SPECTRUM = "no-spectrum"
    NO_PORT = "no-port"


class InstallOutcome(enum.Enum):
    INSTALLED = "installed"
    CONFLICT = "conflict"
    PENDING = "pending"  # awaiting remote verdicts, resolve via finalize_install


@dataclass(frozen=True)
class CompilationResult:
    outcome: CompileOutcome
    children: tuple = ()
    reason: Optional[BlockReason] = None

    def __post_init__(self):
        if self.outcome is CompileOutcome.COMPILED:
            if not self.children or self.reason is not None:
                raise ValueError("compiled result needs children and no reason")


def blocked(reason: BlockReason) -> CompilationResult:
    return CompilationResult(CompileOutcome.BLOCKED, (), reason)


@dataclass
class ReservationLedger:
    """Authoritative record of which intent holds which resources.

    Graph views (slot grids, port counters) are updated in lockstep and are
    derived state; audits may cross-check the two at any time.
    """

    spectrum_holdings: dict = field(default_factory=dict)  # (LinkKey, slot) -> IntentId
    port_holdings: dict = field(default_factory=dict)  # NodeId -> [(IntentId, rate)]

    def holder(self, key, slot):
        return self.spectrum_holdings.get((key, slot))

    def reserve_spectrum(self, link: FiberLink, start: int, end: int, iid) -> None:
        key = link.key
        for slot in range(start, end + 1):
            cell = (key, slot)
            current = self.spectrum_holdings.get(cell)
            if current is not None:
                raise ValueError(f"slot {slot} on {key} already held by {current}")
            self.spectrum_holdings[cell] = iid
            link.slot_grid[slot - 1] = iid

    def release_spectrum(self, link: FiberLink, start: int, end: int, iid) -> None:
        key = link.key
        for slot in range(start, end + 1):
            cell = (key, slot)
            current = self.spectrum_holdings.get(cell)
            if current != iid:
                raise ValueError(
                    f"slot {slot} on {key} held by {current}, not {iid}"
                )
            del self.spectrum_holdings[cell]
            link.slot_grid[slot - 1] = None

    def reserve_port(self, router: RouterView, iid, rate: int) -> None:
        self.port_holdings.setdefault(router.node, []).append((iid, rate))
        router.ports_used += 1

    def release_port(self, router: RouterView, iid, rate: int) -> None:
        holdings = self.port_holdings.get(router.node, [])
        try:
            holdings.remove((iid, rate))
        except ValueError:
            raise ValueError(f"no port held by {iid} at {router.node}") from None
        router.ports_used -= 1
        if not holdings:
            self.port_holdings.pop(router.node, None)

    def reserved_cell_count(self) -> int:
        return len(self.spectrum_holdings)

    def snapshot(self):
        """Frozen copy used by atomicity checks."""
        return (
            dict(self.spectrum_holdings),
            {node: list(held) for node, held in self.port_holdings.items()},
        )


def select_mode(modes, rate: int, distance: float) -> Optional[TransmissionMode]:
    """Cheapest transmission mode serving ``rate`` over ``distance``.

    Feasible modes satisfy mode.rate >= rate and mode.reach >= distance; among
    them the fewest slots wins, then the lowest rate, then table order.
    """
    best = None
    best_key = None
    for idx, mode in enumerate(modes):
        if mode.rate >= rate and mode.reach >= distance:
            key = (mode.slots_needed, mode.rate, idx)
            if best is None or key < best_key:
                best, best_key = mode, key
    return best


def first_fit_spectrum(
    graph: NetworkGraph, path, width: int
) -> Optional[tuple[int, int]]:
    """Lowest-start contiguous block of ``width`` slots free on every link.

    Returns the inclusive (start, end) interval or None when no block fits.
    """
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    links = graph.path_links(path)
    for start in range(1, graph.slot_count - width + 2):
        if all(
            link.is_free(slot)
            for link in links
            for slot in range(start, start + width)
        ):
            return (start, start + width - 1)
    return None


# -- compilation -------------------------------------------------------------


def compile_connectivity(domain, iid) -> CompilationResult:
    """Derive an implementation for a connectivity intent.

    Local destinations are served by the intra-domain pipeline below;
    destinations owned by another domain are delegated through the
    controller's cross-domain path.  A FAILED intent is recompiled: its
    previous implementation is torn down first.
    """
    dag = domain.dag
    payload = dag.payload(iid)
    if not isinstance(payload, ConnectivityIntent):
        raise WrongStateError(f"intent {iid} is not a connectivity intent")

    agg = dag.aggregate_state(iid)
    if agg is IntentState.FAILED:
        teardown_implementation(domain, iid)
    elif agg is not IntentState.UNCOMPILED:
        raise WrongStateError(f"intent {iid} is {agg.value}, expected uncompiled")

    if domain.registry.get(payload.src) != domain.id:
        raise NotLocalSourceError(f"source {payload.src} is not in domain {domain.id}")

    dst_owner = domain.registry.get(payload.dst)
    if dst_owner is None:
        return blocked(BlockReason.NO_PATH)
    if dst_owner != domain.id:
        return domain.compile_crossdomain(iid)
    return _compile_intra(domain, iid, payload)


def _compile_intra(domain, iid, payload: ConnectivityIntent) -> CompilationResult:
    graph = domain.graph
    dag = domain.dag
    src, dst, rate = payload.src, payload.dst, payload.rate

    # Termination resources at both ends; authoritative re-check at install.
    for node in (src, dst):
        if not graph.routers[node].has_free_port(rate):
            return blocked(BlockReason.NO_PORT)
        if not graph.oxcs[node].can_terminate():
            return blocked(BlockReason.NO_PORT)

    paths = graph.k_shortest_paths(
        src, dst, domain.config.k_paths, exclude_links=payload.excluded_links()
    )
    if not paths:
        return blocked(BlockReason.NO_PATH)

    reason = None
    for path in paths:
        length = graph.path_length(path)
        mode = select_mode(domain.config.mode_table, rate, length)
        if mode is None:
            if reason is None:
                reason = BlockReason.NO_MODE
            continue
        block = first_fit_spectrum(graph, path, mode.slots_needed)
        if block is None:
            if reason is None:
                reason = BlockReason.NO_SPECTRUM
            continue
        children = (
            dag.add_child(iid, RouterPortIntent(src, rate)),
            dag.add_child(iid, RouterPortIntent(dst, rate)),
            dag.add_child(iid, LightpathIntent(tuple(path), mode, block)),
        )
        for child in children:
            dag.transition(child, IntentState.COMPILED)
        dag.transition(iid, IntentState.COMPILED)
        return CompilationResult(CompileOutcome.COMPILED, children)

    return blocked(reason if reason is not None else BlockReason.NO_PATH)


def compile_probe(domain, src, dst, rate, excluded_links=(), as_free=()) -> bool:
    """Dry-run feasibility of an intra-domain compilation.

    ``as_free`` names intent ids whose current holdings count as available,
    so a failed intent's own reservations do not block its recompilation.
    """
    graph = domain.graph
    as_free = set(as_free)

    def port_ok(node):
        router = graph.routers[node]
        freed = sum(1 for held, _ in domain.ledger.port_holdings.get(node, ())
                    if held in as_free)
        return router.ports_used - freed < router.port_count and rate <= router.port_rate

    def terminate_ok(node, holders):
        oxc = graph.oxcs[node]
        return oxc.add_drop_used - holders.get(node, 0) < oxc.add_drop_capacity

    if not (port_ok(src) and port_ok(dst)):
        return False
    freed_adddrop = _adddrop_held_by(domain, as_free)
    if not (terminate_ok(src, freed_adddrop) and terminate_ok(dst, freed_adddrop)):
        return False

    for path in graph.k_shortest_paths(src, dst, domain.config.k_paths,
                                       exclude_links=excluded_links):
        mode = select_mode(domain.config.mode_table, rate, graph.path_length(path))
        if mode is None:
            continue
        links = graph.path_links(path)
        width = mode.slots_needed
        for start in range(1, graph.slot_count - width + 2):
            if all(
                link.is_free(slot) or link.holder(slot) in as_free
                for link in links
                for slot in range(start, start + width)
            ):
                return True
    return False


def _adddrop_held_by(domain, intent_ids) -> dict:
    """Count add/drop terminations currently held by the given intents."""
    counts: dict = {}
    for iid in intent_ids:
        payload = domain.dag.nodes[iid].payload if iid in domain.dag.nodes else None
        if isinstance(payload, LightpathIntent) and domain.dag.state(iid) in (
            IntentState.INSTALLED,
            IntentState.FAILED,
        ):
            for end in (payload.path[0], payload.path[-1]):
                counts[end] = counts.get(end, 0) + 1
    return counts


# -- installation ------------------------------------------------------------


def install_intent(domain, iid) -> InstallOutcome:
    """Reserve every child resource of a compiled intent, all or nothing.

    Validates the full set of reservations first, then commits; a conflict
    leaves the ledger and the graph bit-identical to the pre-call state.
    """
    dag = domain.dag
    dag.payload(iid)
    agg = dag.aggregate_state(iid)
    if agg is not IntentState.COMPILED:
        raise WrongStateError(f"intent {iid} is {agg.value}, expected compiled")

    graph = domain.graph
    demands = []
    for leaf in dag.leaves_under(iid):
        payload = dag.payload(leaf)
        if isinstance(payload, RemoteIntent):
            raise ValueError(
                f"{iid} has a remote part; use the cross-domain install"
            )
        if dag.state(leaf) is IntentState.COMPILED:
            demands.append((leaf, payload))

    # Validate with scratch counters so multiple children at one node are
    # counted cumulatively.
    port_need: dict = {}
    adddrop_need: dict = {}
    spectrum_need: dict = {}
    for leaf, payload in demands:
        if isinstance(payload, RouterPortIntent):
            router = graph.routers.get(payload.node)
            if router is None or payload.rate > router.port_rate:
                return InstallOutcome.CONFLICT
            port_need[payload.node] = port_need.get(payload.node, 0) + 1
        elif isinstance(payload, LightpathIntent):
            links = graph.path_links(payload.path)
            start, end = payload.slot_range
            for link in links:
                if not link.operational:
                    return InstallOutcome.CONFLICT
                for slot in range(start, end + 1):
                    cell = (link.key, slot)
                    if not link.is_free(slot) or cell in spectrum_need:
                        return InstallOutcome.CONFLICT
                    spectrum_need[cell] = leaf
            for node in (payload.path[0], payload.path[-1]):
                adddrop_need[node] = adddrop_need.get(node, 0) + 1
    for node, need in port_need.items():
        if graph.routers[node].ports_used + need > graph.routers[node].port_count:
            return InstallOutcome.CONFLICT
    for node, need in adddrop_need.items():
        if graph.oxcs[node].add_drop_used + need > graph.oxcs[node].add_drop_capacity:
            return InstallOutcome.CONFLICT

    # Commit.
    from .network import VirtualLink

    for leaf, payload in demands:
        if isinstance(payload, RouterPortIntent):
            domain.ledger.reserve_port(graph.routers[payload.node], leaf, payload.rate)
        elif isinstance(payload, LightpathIntent):
            start, end = payload.slot_range
            for link in graph.path_links(payload.path):
                domain.ledger.reserve_spectrum(link, start, end, leaf)
            for node in (payload.path[0], payload.path[-1]):
                graph.oxcs[node].add_drop_used += 1
            graph.virtual_links.append(
                VirtualLink(
                    (payload.path[0], payload.path[-1]), payload.mode.rate, leaf
                )
            )
        dag.transition(leaf, IntentState.INSTALLED)
    return InstallOutcome.INSTALLED


def uninstall_intent(domain, iid) -> None:
    """Release every resource held by the intent's children.

    Legal for installed intents and for failed ones (a failed lightpath keeps
    its reservations until explicitly uninstalled); leaves return to compiled.
    """
    dag = domain.dag
    dag.payload(iid)
    agg = dag.aggregate_state(iid)
    if agg not in (IntentState.INSTALLED, IntentState.FAILED):
        raise WrongStateError(f"intent {iid} is {agg.value}, expected installed/failed")

    graph = domain.graph
    for leaf in dag.leaves_under(iid):
        payload = dag.payload(leaf)
        state = dag.state(leaf)
        if state not in (IntentState.INSTALLED, IntentState.FAILED):
            continue
        if isinstance(payload, RouterPortIntent):
            domain.ledger.release_port(graph.routers[payload.node], leaf, payload.rate)
        elif isinstance(payload, LightpathIntent):
            start, end = payload.slot_range
            for link in graph.path_links(payload.path):
                domain.ledger.release_spectrum(link, start, end, leaf)
            for node in (payload.path[0], payload.path[-1]):
                graph.oxcs[node].add_drop_used -= 1
            graph.virtual_links[:] = [
                v for v in graph.virtual_links if v.lightpath != leaf
            ]
        dag.transition(leaf, IntentState.COMPILED)


def teardown_implementation(domain, iid) -> None:
    """Drop an intent's children and return it to uncompiled.

    Releases reservations first when needed.  Refuses intents with remote
    parts: delegated implementations are torn down by the controller, which
    must notify the neighbor.
    """
    dag = domain.dag
    for child in dag.children(iid):
        if isinstance(dag.payload(child), RemoteIntent):
            raise ValueError(f"{iid} has remote parts; tear down via the controller")
    if dag.aggregate_state(iid) in (IntentState.INSTALLED, IntentState.FAILED):
        uninstall_intent(domain, iid)
    for child in dag.children(iid):
        dag.remove_intent(child)
    if dag.state(iid) is IntentState.COMPILED:
        dag.transition(iid, IntentState.UNCOMPILED)
