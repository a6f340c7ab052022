"""Address notation helpers: dotted-quad IPv4, colon-hex MAC, literal detection."""

from __future__ import annotations

import ipaddress
import re

MAC_MAX = (1 << 48) - 1
IPV4_MAX = (1 << 32) - 1
VLAN_MAX = (1 << 12) - 1
PROTO_MAX = (1 << 8) - 1
PORT_MAX = (1 << 16) - 1

_MAC_RE = re.compile(r"^[0-9A-Fa-f]{2}(?::[0-9A-Fa-f]{2}){5}$")
# Detection is deliberately broader than parsing: hyphenated MACs and
# CIDR-suffixed addresses count as literals even though documents may not
# use those spellings.
_MAC_LITERAL_RE = re.compile(r"^[0-9A-Fa-f]{2}(?:([:-])[0-9A-Fa-f]{2}){5}$")
_IPV4_LITERAL_RE = re.compile(r"^\d{1,3}(?:\.\d{1,3}){3}(?:/\d{1,2})?$")
_BARE_INT_RE = re.compile(r"^\d+$")


def parse_mac(text: str) -> int:
    """Parse a colon-hex hardware address into its 48-bit integer value."""
    if not isinstance(text, str) or not _MAC_RE.match(text):
        raise ValueError(f"not a colon-hex MAC address: {text!r}")
    return int(text.replace(":", ""), 16)


def format_mac(value: int) -> str:
    if not 0 <= value <= MAC_MAX:
        raise ValueError(f"MAC value out of range: {value}")
    digits = f"{value:012x}"
    return ":".join(digits[i : i + 2] for i in range(0, 12, 2))


def parse_ipv4(text: str) -> int:
    """Parse a dotted-quad IPv4 address into its 32-bit integer value."""
    if not isinstance(text, str):
        raise ValueError(f"not a dotted-quad IPv4 address: {text!r}")
    try:
        return int(ipaddress.IPv4Address(text))
    except ipaddress.AddressValueError as exc:
        raise ValueError(f"not a dotted-quad IPv4 address: {text!r}") from exc


def format_ipv4(value: int) -> str:
    if not 0 <= value <= IPV4_MAX:
        raise ValueError(f"IPv4 value out of range: {value}")
    return str(ipaddress.IPv4Address(value))


def is_network_literal(token: str) -> bool:
    """True when a token spells a concrete network value.

    Symbolic policy fields must never contain such tokens: dotted-quad
    IPv4 addresses (with or without a prefix length), colon- or
    hyphen-separated MAC addresses, and bare unsigned integers (VLAN ids
    and port numbers) all count.
    """
    if not isinstance(token, str):
        return False
    token = token.strip()
    return bool(
        _IPV4_LITERAL_RE.match(token)
        or _MAC_LITERAL_RE.match(token)
        or _BARE_INT_RE.match(token)
    )
