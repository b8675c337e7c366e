"""Network attachment points and the border gateway.

A NAP is the ICN client serving legacy IP devices: it subscribes to the
names of its assigned addresses, encapsulates outgoing IP packets under
the matching destination name, buffers them until a forwarding identifier
arrives, and decapsulates inbound data back to plain IP. The HTTP handler
keeps the unicast request/response abstraction while coalescing concurrent
requests for one URL into a single multicast response delivery.

The border gateway relays between the ICN domain and external IP peers:
it holds a standing subscription to the external scope and encapsulates
ingress traffic under internal names.

Devices only ever see IpPacket and HttpResponse values; no ICN type
crosses the device boundary.
"""

from __future__ import annotations

import ipaddress
import json
import struct
from collections import Counter, deque
from dataclasses import dataclass, field

from .forwarding import DEFAULT_TTL, IcnPacket, PacketKind
from .names import (
    ROOT_HTTP,
    ROOT_IP,
    HttpRole,
    IcnName,
    Locality,
    external_scope,
    http_request_scope,
    is_ancestor,
    name_for_http,
    name_for_ip,
)
from .rendezvous import ClientId
from .topology import FidDelivery

MAX_IP_PAYLOAD = 65507
PENDING_CAPACITY = 64
DEFAULT_WINDOW_US = 100_000

# HTTP bodies travel as framed segments: offset u64 | total u64 | chunk.
_SEGMENT_FRAME = struct.Struct(">QQ")
SEGMENT_CHUNK = MAX_IP_PAYLOAD

_IP_HEADER = struct.Struct(">4s4sBQ")


@dataclass(frozen=True)
class IpPacket:
    """A plain IP datagram as seen by devices and peers."""

    src: ipaddress.IPv4Address
    dst: ipaddress.IPv4Address
    proto: int
    id: int
    payload: bytes

    def __post_init__(self) -> None:
        if len(self.payload) > MAX_IP_PAYLOAD:
            raise ValueError(f"IP payload longer than {MAX_IP_PAYLOAD}")


@dataclass(frozen=True)
class HttpResponse:
    """A completed HTTP exchange as seen by the requesting device."""

    fqdn: str
    url: str
    body: bytes


def encode_ip_packet(pkt: IpPacket) -> bytes:
    return _IP_HEADER.pack(pkt.src.packed, pkt.dst.packed, pkt.proto, pkt.id) + pkt.payload


def decode_ip_packet(buf: bytes) -> IpPacket:
    if len(buf) < _IP_HEADER.size:
        raise ValueError("truncated IP encapsulation")
    src, dst, proto, pkt_id = _IP_HEADER.unpack_from(buf)
    return IpPacket(
        src=ipaddress.IPv4Address(src),
        dst=ipaddress.IPv4Address(dst),
        proto=proto,
        id=pkt_id,
        payload=buf[_IP_HEADER.size :],
    )


def synth_bytes(tag: str, size: int) -> bytes:
    """Deterministic filler content so payload identity is checkable."""
    if size == 0:
        return b""
    pattern = tag.encode() + b"|"
    return (pattern * (size // len(pattern) + 1))[:size]


@dataclass
class HttpExchange:
    """Server-side aggregation of concurrent requests for one URL."""

    fqdn: str
    url: str
    requesters: set[ClientId]
    window_deadline: int
    response_size: int
    closed: bool = False


@dataclass
class _GetState:
    fqdn: str
    url: str
    count: int = 1
    total: int | None = None
    buf: dict[int, bytes] = field(default_factory=dict)


class _IcnClient:
    """Shared publish-side machinery: fid cache, pending buffers, announce."""

    def __init__(self, env, client: ClientId, node: int) -> None:
        self.env = env
        self.client = client
        self.node = node
        self.counters: Counter[str] = Counter()
        self._fid_cache: dict[IcnName, tuple[int, bool]] = {}
        self._pending_ip: dict[IcnName, deque[IpPacket]] = {}
        self._pending_raw: dict[IcnName, list[bytes]] = {}
        self._announced: set[IcnName] = set()
        self._unpublish_after_flush: set[IcnName] = set()
        self._seen_ids: set[int] = set()

    @property
    def fid_cache(self) -> dict[IcnName, tuple[int, bool]]:
        return self._fid_cache

    def pending_depth(self, name: IcnName) -> int:
        return len(self._pending_ip.get(name, ()))

    def _announce(self, name: IcnName) -> None:
        if name not in self._announced:
            self._announced.add(name)
            self.env.publish_availability(self.client, name)

    def _queue_ip(self, name: IcnName, pkt: IpPacket) -> None:
        queue = self._pending_ip.setdefault(name, deque(maxlen=PENDING_CAPACITY))
        if len(queue) == PENDING_CAPACITY:
            # deque(maxlen) evicts the oldest entry on append
            self.counters["drops"] += 1
        queue.append(pkt)
        self._announce(name)

    def _queue_raw(self, name: IcnName, payload: bytes) -> None:
        # caller announces once everything for the name is queued: the
        # availability publication can complete the whole fid round trip
        # synchronously, flushing the queue on the spot
        self._pending_raw.setdefault(name, []).append(payload)

    def _send_encapsulated(self, name: IcnName, pkt: IpPacket) -> None:
        cached = self._fid_cache.get(name)
        if cached is None:
            self._queue_ip(name, pkt)
        else:
            self._emit(name, encode_ip_packet(pkt), cached)

    def _emit(self, name: IcnName, payload: bytes, cached: tuple[int, bool]) -> None:
        fid, local = cached
        pkt = IcnPacket(
            fid=fid, kind=PacketKind.DATA, name=name, payload=payload, ttl=DEFAULT_TTL
        )
        self.env.transmit(self.client, pkt)
        if local:
            self.on_icn_data(pkt, loopback=True)

    def on_fid(self, d: FidDelivery) -> None:
        """Cache a delivered forwarding id and flush everything buffered.

        A zero fid without the local flag means no subscribers remain: the
        cache entry goes away and later sends queue again.
        """
        if d.teardown:
            self._fid_cache.pop(d.name, None)
            return
        cached = (d.fid, d.local)
        self._fid_cache[d.name] = cached
        queue = self._pending_ip.get(d.name)
        while queue:
            self._emit(d.name, encode_ip_packet(queue.popleft()), cached)
        for payload in self._pending_raw.pop(d.name, ()):
            self._emit(d.name, payload, cached)
        if d.name in self._unpublish_after_flush:
            self._unpublish_after_flush.discard(d.name)
            self._announced.discard(d.name)
            self.env.unpublish(self.client, d.name)

    def on_icn_data(self, pkt: IcnPacket, loopback: bool = False) -> None:
        raise NotImplementedError


class Nap(_IcnClient):
    """Network attachment point for legacy IP devices."""

    def __init__(
        self,
        env,
        client: ClientId,
        node: int,
        prefixes: tuple[ipaddress.IPv4Network, ...],
        operator_prefixes: tuple[ipaddress.IPv4Network, ...],
        window_us: int = DEFAULT_WINDOW_US,
    ) -> None:
        super().__init__(env, client, node)
        self.prefixes = prefixes
        self.operator_prefixes = operator_prefixes
        self.window_us = window_us
        self.addresses: set[ipaddress.IPv4Address] = set()
        self.device_log: list[IpPacket] = []
        self.http_log: list[HttpResponse] = []
        self._served: dict[IcnName, str] = {}
        self._exchanges: dict[IcnName, HttpExchange] = {}
        self._gets: dict[IcnName, _GetState] = {}

    # -- device-facing API (IP and HTTP values only) -----------------------

    def attach_device(self, addr: ipaddress.IPv4Address | str) -> None:
        """Assign an address and subscribe to its internal name."""
        addr = ipaddress.IPv4Address(addr)
        if not any(addr in p for p in self.prefixes):
            raise ValueError(f"{addr} outside this NAP's prefixes")
        if addr in self.addresses:
            raise ValueError(f"{addr} already assigned")
        self.env.register_address(addr, self.client)
        self.addresses.add(addr)
        self.env.subscribe(self.client, name_for_ip(addr, Locality.INTERNAL))

    def send_ip(self, pkt: IpPacket) -> None:
        """Encapsulate a device packet under its destination's name."""
        if pkt.src not in self.addresses:
            raise ValueError(f"source {pkt.src} not assigned at this NAP")
        internal = any(pkt.dst in p for p in self.operator_prefixes)
        loc = Locality.INTERNAL if internal else Locality.EXTERNAL
        self._send_encapsulated(name_for_ip(pkt.dst, loc), pkt)

    def http_get(self, fqdn: str, url: str, resp_bytes: int) -> None:
        """Fetch a URL: subscribe to the response, publish the request."""
        if not self.env.fqdn_served(fqdn):
            self.counters["unroutable_http"] += 1
            return
        resp_name = name_for_http(fqdn, HttpRole.RESPONSE, url)
        state = self._gets.get(resp_name)
        if state is not None:
            # a fetch for this URL is already in flight; share its response
            state.count += 1
            return
        self._gets[resp_name] = _GetState(fqdn=fqdn, url=url)
        self.env.subscribe(self.client, resp_name)
        req_name = name_for_http(fqdn, HttpRole.REQUEST, url)
        request = json.dumps(
            {"client": self.client, "fqdn": fqdn, "resp_bytes": resp_bytes, "url": url},
            sort_keys=True,
        ).encode()
        self._unpublish_after_flush.add(req_name)
        self._queue_raw(req_name, request)
        self._announce(req_name)

    def http_serve(self, fqdn: str) -> None:
        """Register as the server for a host: subscribe to its request scope."""
        scope = http_request_scope(fqdn)
        self._served[scope] = fqdn
        self.env.register_fqdn(fqdn, self.client)
        self.env.subscribe(self.client, scope)

    # -- ICN-facing handlers ----------------------------------------------

    def on_icn_data(self, pkt: IcnPacket, loopback: bool = False) -> None:
        if pkt.kind != PacketKind.DATA:
            self.counters["protocol_violations"] += 1
            return
        root = pkt.name.scopes[0].value
        if root == ROOT_IP:
            self._recv_ip(pkt, loopback)
        elif root == ROOT_HTTP:
            self._recv_http(pkt, loopback)
        elif not loopback:
            self.counters["fp_deliveries"] += 1

    def _recv_ip(self, pkt: IcnPacket, loopback: bool) -> None:
        try:
            ip = decode_ip_packet(pkt.payload)
        except ValueError:
            self.counters["corrupt"] += 1
            return
        if ip.dst in self.addresses and pkt.name == name_for_ip(
            ip.dst, Locality.INTERNAL
        ):
            if ip.id in self._seen_ids:
                self.counters["duplicates"] += 1
                return
            self._seen_ids.add(ip.id)
            self.device_log.append(ip)
            self.env.note_ip_delivered(self.client, ip)
        elif not loopback:
            self.counters["fp_deliveries"] += 1

    def _recv_http(self, pkt: IcnPacket, loopback: bool) -> None:
        name = pkt.name
        if name in self._gets:
            self._recv_response_segment(name, pkt.payload)
            return
        if len(name.scopes) == 3 and name.is_item:
            scope = name.scope_prefix(3)
            if scope in self._served:
                self._recv_request(pkt.payload)
                return
        if not loopback:
            self.counters["fp_deliveries"] += 1

    def _recv_request(self, payload: bytes) -> None:
        try:
            req = json.loads(payload)
            fqdn, url = req["fqdn"], req["url"]
            requester, size = int(req["client"]), int(req["resp_bytes"])
        except (ValueError, KeyError, TypeError):
            self.counters["corrupt"] += 1
            return
        resp_name = name_for_http(fqdn, HttpRole.RESPONSE, url)
        ex = self._exchanges.get(resp_name)
        if ex is None or ex.closed:
            ex = HttpExchange(
                fqdn=fqdn,
                url=url,
                requesters={requester},
                window_deadline=self.env.now_us() + self.window_us,
                response_size=size,
            )
            self._exchanges[resp_name] = ex
            self.env.call_at(ex.window_deadline, lambda: self._close_exchange(resp_name))
        else:
            ex.requesters.add(requester)
            ex.response_size = max(ex.response_size, size)

    def _close_exchange(self, resp_name: IcnName) -> None:
        """Window expiry: publish the response once for every requester."""
        ex = self._exchanges[resp_name]
        ex.closed = True
        body = synth_bytes(f"{ex.fqdn}{ex.url}", ex.response_size)
        total = len(body)
        offsets = range(0, total, SEGMENT_CHUNK) if total else (0,)
        self._unpublish_after_flush.add(resp_name)
        for offset in offsets:
            frame = _SEGMENT_FRAME.pack(offset, total)
            self._queue_raw(resp_name, frame + body[offset : offset + SEGMENT_CHUNK])
        self._announce(resp_name)

    def _recv_response_segment(self, name: IcnName, payload: bytes) -> None:
        state = self._gets[name]
        if len(payload) < _SEGMENT_FRAME.size:
            self.counters["corrupt"] += 1
            return
        offset, total = _SEGMENT_FRAME.unpack_from(payload)
        if offset in state.buf:
            self.counters["duplicates"] += 1
            return
        state.buf[offset] = payload[_SEGMENT_FRAME.size :]
        state.total = total
        if sum(len(c) for c in state.buf.values()) < total:
            return
        body = b"".join(state.buf[o] for o in sorted(state.buf))[:total]
        response = HttpResponse(fqdn=state.fqdn, url=state.url, body=body)
        for _ in range(state.count):
            self.http_log.append(response)
            self.env.note_http_complete(self.client, state.fqdn, state.url, body)
        del self._gets[name]
        self.env.unsubscribe(self.client, name)


class BorderGateway(_IcnClient):
    """Relay between the ICN domain and external IP peers."""

    def __init__(
        self,
        env,
        client: ClientId,
        node: int,
        operator_prefixes: tuple[ipaddress.IPv4Network, ...],
    ) -> None:
        super().__init__(env, client, node)
        self.operator_prefixes = operator_prefixes
        self.peer_log: list[tuple[int, IpPacket]] = []

    def start(self) -> None:
        """Take the standing subscription to the external scope."""
        self.env.subscribe(self.client, external_scope())

    def ingress(self, pkt: IpPacket) -> None:
        """An external sender's packet entering the operator domain."""
        if not any(pkt.dst in p for p in self.operator_prefixes):
            self.counters["drops"] += 1
            return
        self._send_encapsulated(name_for_ip(pkt.dst, Locality.INTERNAL), pkt)

    def egress(self, pkt: IcnPacket) -> None:
        """Externally-destined data leaving over the peering link."""
        if not is_ancestor(external_scope(), pkt.name):
            self.counters["protocol_violations"] += 1
            return
        try:
            ip = decode_ip_packet(pkt.payload)
        except ValueError:
            self.counters["corrupt"] += 1
            return
        if ip.id in self._seen_ids:
            self.counters["duplicates"] += 1
            return
        self._seen_ids.add(ip.id)
        self.peer_log.append((self.env.now_us(), ip))
        self.env.note_peer_emitted(self.client, ip)

    def on_icn_data(self, pkt: IcnPacket, loopback: bool = False) -> None:
        if pkt.kind != PacketKind.DATA:
            self.counters["protocol_violations"] += 1
            return
        if pkt.name.scopes[: 2] == external_scope().scopes:
            self.egress(pkt)
        elif not loopback:
            self.counters["fp_deliveries"] += 1
