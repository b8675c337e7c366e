"""Hierarchical ICN namespace and the deterministic IP/HTTP mappings into it.

Names are rooted paths of 64-bit scope identifiers with an optional item
identifier at the leaf. IPv4 addresses map octet-per-scope under a fixed
"ip" root, split into internal and external halves; HTTP messages map under
an "http" root keyed by hashed host and URL.
"""

from __future__ import annotations

import enum
import ipaddress
import re
from dataclasses import dataclass

MAX_DEPTH = 16

# Root scope constants: "ip" and "http" as big-endian ASCII.
ROOT_IP = 0x6970
ROOT_HTTP = 0x68747470

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = 1 << 64

_HEX_ELEM = re.compile(r"^[0-9a-f]{1,16}$")


class Locality(enum.Enum):
    """Whether an address lives inside or outside the operator network."""

    INTERNAL = 1
    EXTERNAL = 2


class HttpRole(enum.Enum):
    REQUEST = 1
    RESPONSE = 2


@dataclass(frozen=True, order=True)
class NsId:
    """A single 64-bit scope or item identifier."""

    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value < _U64:
            raise ValueError(f"identifier out of 64-bit range: {self.value}")

    @property
    def hex(self) -> str:
        return f"{self.value:016x}"

    @classmethod
    def from_hex(cls, text: str) -> "NsId":
        if not _HEX_ELEM.match(text):
            raise ValueError(f"malformed identifier element: {text!r}")
        return cls(int(text, 16))


@dataclass(frozen=True)
class IcnName:
    """A scope path with an optional item identifier.

    A name without an item is scope-level and can cover whole subtrees;
    a name with an item designates one publishable information item.
    """

    scopes: tuple[NsId, ...]
    item: NsId | None = None

    def __post_init__(self) -> None:
        if not self.scopes:
            raise ValueError("name needs at least one scope")
        if len(self.scopes) > MAX_DEPTH:
            raise ValueError(f"scope path deeper than {MAX_DEPTH}")

    @property
    def is_item(self) -> bool:
        return self.item is not None

    def scope_prefix(self, depth: int) -> "IcnName":
        """The scope-level name made of the first `depth` scopes."""
        return IcnName(self.scopes[:depth])


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a over a byte string."""
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) % _U64
    return h


def _loc_scope(loc: Locality) -> NsId:
    return NsId(loc.value)


def name_for_ip(addr: ipaddress.IPv4Address | str, loc: Locality) -> IcnName:
    """Item name for one IPv4 address: one scope per leading octet, the
    final octet as the item."""
    addr = ipaddress.IPv4Address(addr)
    o1, o2, o3, o4 = addr.packed
    return IcnName(
        scopes=(NsId(ROOT_IP), _loc_scope(loc), NsId(o1), NsId(o2), NsId(o3)),
        item=NsId(o4),
    )


def subnet_scope(prefix: ipaddress.IPv4Network | str, loc: Locality) -> IcnName:
    """Scope-level name covering a /8, /16 or /24 subnet."""
    net = ipaddress.IPv4Network(prefix)
    if net.prefixlen not in (8, 16, 24):
        raise ValueError(
            f"unsupported subnet granularity /{net.prefixlen}; use /8, /16 or /24"
        )
    octets = net.network_address.packed[: net.prefixlen // 8]
    scopes = (NsId(ROOT_IP), _loc_scope(loc)) + tuple(NsId(o) for o in octets)
    return IcnName(scopes=scopes)


def external_scope() -> IcnName:
    """The scope every externally-destined address name falls under."""
    return IcnName(scopes=(NsId(ROOT_IP), _loc_scope(Locality.EXTERNAL)))


def name_for_http(fqdn: str, role: HttpRole, url: str) -> IcnName:
    """Item name for an HTTP request or response about (fqdn, url)."""
    if not fqdn or not url:
        raise ValueError("fqdn and url must be non-empty")
    return IcnName(
        scopes=(NsId(ROOT_HTTP), NsId(fnv1a64(fqdn.encode())), NsId(role.value)),
        item=NsId(fnv1a64(url.encode())),
    )


def http_request_scope(fqdn: str) -> IcnName:
    """Scope covering every request item name for one host."""
    if not fqdn:
        raise ValueError("fqdn must be non-empty")
    return IcnName(
        scopes=(
            NsId(ROOT_HTTP),
            NsId(fnv1a64(fqdn.encode())),
            NsId(HttpRole.REQUEST.value),
        )
    )


def is_ancestor(scope: IcnName, name: IcnName) -> bool:
    """True iff `scope`'s path is a (non-strict) prefix of `name`'s scope path.

    Items never count as scopes, so /a/b is not an ancestor of (/a item b).
    """
    if scope.is_item:
        raise ValueError("ancestor test needs a scope-level name")
    return scope.scopes == name.scopes[: len(scope.scopes)]


def covers(sub: IcnName, item: IcnName) -> bool:
    """Whether a subscription name matches a published item name: equal
    item names, or the subscription scope is an ancestor of the item."""
    if sub.is_item:
        return sub == item
    return is_ancestor(sub, item)


def render_name(name: IcnName) -> str:
    """Canonical text form: 16-hex-digit path elements, item prefixed `~`."""
    parts = [s.hex for s in name.scopes]
    if name.item is not None:
        parts.append("~" + name.item.hex)
    return "/" + "/".join(parts)


def parse_name(text: str) -> IcnName:
    """Parse the textual grammar; inverse of render_name on canonical
    strings, and tolerant of unpadded (1..16 digit) elements."""
    if not text.startswith("/"):
        raise ValueError(f"name must start with '/': {text!r}")
    parts = text[1:].split("/")
    if parts == [""]:
        raise ValueError("empty name path")
    item: NsId | None = None
    if parts[-1].startswith("~"):
        item = NsId.from_hex(parts[-1][1:])
        parts = parts[:-1]
    if not parts:
        raise ValueError("name needs at least one scope")
    if any(p.startswith("~") for p in parts):
        raise ValueError("'~' only marks the final element")
    if len(parts) > MAX_DEPTH:
        raise ValueError(f"scope path deeper than {MAX_DEPTH}")
    return IcnName(scopes=tuple(NsId.from_hex(p) for p in parts), item=item)
