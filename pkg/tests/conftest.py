"""Shared fixtures: graph builders and a synchronous gateway environment."""

from __future__ import annotations

import heapq
import json
import random

import pytest

from ipicn.forwarding import IcnPacket, forward
from ipicn.rendezvous import Rendezvous
from ipicn.topology import NetworkGraph, TopologyDoc, handle_match, load_topology_doc


def make_topology_doc(
    nodes, undirected_links, naps=(), border=None, seed=1
) -> TopologyDoc:
    doc = {
        "nodes": [{"id": n} for n in nodes],
        "links": [
            {
                "a": a,
                "b": b,
                "delay_us": extra.get("delay_us", 1000),
                "capacity_bps": extra.get("capacity_bps", 1_000_000_000),
            }
            for a, b, extra in (
                (l[0], l[1], l[2] if len(l) > 2 else {}) for l in undirected_links
            )
        ],
        "naps": [dict(n) for n in naps],
    }
    if border is not None:
        doc["border"] = dict(border)
    return load_topology_doc(json.dumps(doc), seed)


def random_connected_graph(rng: random.Random, n_nodes: int, n_extra: int):
    """Random spanning tree plus extra edges; returns undirected pair list."""
    nodes = list(range(1, n_nodes + 1))
    pairs = set()
    for i in range(1, n_nodes):
        parent = rng.choice(nodes[:i])
        pairs.add((min(parent, nodes[i]), max(parent, nodes[i])))
    attempts = 0
    while len(pairs) < n_nodes - 1 + n_extra and attempts < 20 * n_extra:
        a, b = rng.sample(nodes, 2)
        pairs.add((min(a, b), max(a, b)))
        attempts += 1
    return nodes, sorted(pairs)


def flood(g: NetworkGraph, origin: int, pkt: IcnPacket):
    """Untimed propagation of one packet: arrival counts and traversals.

    Returns (arrivals per node, list of traversed (src, dst) pairs).
    """
    arrivals: dict[int, int] = {}
    traversals: list[tuple[int, int]] = []
    frontier = [(origin, pkt, None)]
    while frontier:
        node, copy, in_link = frontier.pop()
        for link in forward(g, node, copy, in_link):
            traversals.append((link.src, link.dst))
            arrivals[link.dst] = arrivals.get(link.dst, 0) + 1
            frontier.append(
                (link.dst, IcnPacket(copy.fid, copy.kind, copy.name,
                                     copy.payload, copy.ttl - 1), link)
            )
    return arrivals, traversals


class SyncEnv:
    """Instant control plane over a real rendezvous and topology manager.

    Control operations take effect immediately and FidDeliveries are pushed
    straight into gateways; data packets propagate untimed through the
    graph, offered at every visited node. Wall time only moves via advance().
    """

    def __init__(self, graph: NetworkGraph) -> None:
        self.graph = graph
        self.rv = Rendezvous()
        self.gateways: dict[int, object] = {}
        self.now = 0
        self._timers: list[tuple[int, int, object]] = []
        self._timer_seq = 0
        self.addr_owner: dict[object, int] = {}
        self.fqdns: dict[str, int] = {}
        self.control_log: list[tuple[str, int, object]] = []
        self.emissions: list[tuple[int, IcnPacket]] = []
        self.ip_deliveries: list[tuple[int, object]] = []
        self.http_completions: list[tuple[int, str, str, bytes]] = []
        self.peer_emissions: list[tuple[int, object]] = []

    def add(self, gw) -> None:
        self.gateways[gw.client] = gw

    # -- clock -------------------------------------------------------------

    def now_us(self) -> int:
        return self.now

    def call_at(self, time_us: int, fn) -> None:
        heapq.heappush(self._timers, (max(time_us, self.now), self._timer_seq, fn))
        self._timer_seq += 1

    def advance(self, to_us: int) -> None:
        while self._timers and self._timers[0][0] <= to_us:
            t, _, fn = heapq.heappop(self._timers)
            self.now = t
            fn()
        self.now = to_us

    # -- control plane -------------------------------------------------------

    def _dispatch(self, events) -> None:
        for ev in events:
            fd = handle_match(self.graph, ev)
            gw = self.gateways.get(ev.publisher)
            if gw is not None:
                gw.on_fid(fd)

    def subscribe(self, client, name) -> None:
        self.control_log.append(("subscribe", client, name))
        self._dispatch(self.rv.subscribe(client, name))

    def unsubscribe(self, client, name) -> None:
        self.control_log.append(("unsubscribe", client, name))
        self._dispatch(self.rv.unsubscribe(client, name))

    def publish_availability(self, client, name) -> None:
        self.control_log.append(("publish", client, name))
        ev = self.rv.publish_availability(client, name)
        self._dispatch([ev] if ev else [])

    def unpublish(self, client, name) -> None:
        self.control_log.append(("unpublish", client, name))
        ev = self.rv.unpublish(client, name)
        self._dispatch([ev] if ev else [])

    # -- data plane ------------------------------------------------------------

    def transmit(self, client, pkt: IcnPacket) -> None:
        self.emissions.append((client, pkt))
        origin = self.gateways[client].node
        for other in sorted(self.gateways):
            gw = self.gateways[other]
            if other != client and gw.node == origin:
                gw.on_icn_data(pkt)
        arrivals, _ = flood(self.graph, origin, pkt)
        for node in sorted(arrivals):
            for cid in sorted(self.gateways):
                gw = self.gateways[cid]
                if gw.node == node:
                    for _ in range(arrivals[node]):
                        gw.on_icn_data(pkt)

    # -- registries and notes ----------------------------------------------------

    def register_address(self, addr, client) -> None:
        if addr in self.addr_owner:
            raise ValueError(f"{addr} already assigned")
        self.addr_owner[addr] = client

    def register_fqdn(self, fqdn, client) -> None:
        self.fqdns[fqdn] = client

    def fqdn_served(self, fqdn) -> bool:
        return fqdn in self.fqdns

    def note_ip_delivered(self, client, pkt) -> None:
        self.ip_deliveries.append((client, pkt))

    def note_http_complete(self, client, fqdn, url, body) -> None:
        self.http_completions.append((client, fqdn, url, body))

    def note_peer_emitted(self, client, pkt) -> None:
        self.peer_emissions.append((client, pkt))


@pytest.fixture
def line3_doc() -> TopologyDoc:
    """1 - 2 - 3 line with a NAP on each end node and a border at node 1."""
    return make_topology_doc(
        nodes=[1, 2, 3],
        undirected_links=[(1, 2), (2, 3)],
        naps=[
            {"client": 1, "node": 3, "prefixes": ["10.0.1.0/24"]},
            {"client": 2, "node": 1, "prefixes": ["10.0.2.0/24"]},
        ],
        border={"client": 99, "node": 1},
        seed=11,
    )
