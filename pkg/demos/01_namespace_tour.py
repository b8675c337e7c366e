"""Tour of the information namespace.

Every IPv4 address becomes a hierarchical name: one scope per leading
octet under an internal/external split, with the last octet as the item.
URLs hash into a parallel namespace keyed by host. Subscribing to a scope
covers everything underneath it, which is what lets one border gateway
receive all externally-bound traffic.
"""

from ipicn import (
    HttpRole,
    Locality,
    external_scope,
    is_ancestor,
    name_for_http,
    name_for_ip,
    parse_name,
    render_name,
    subnet_scope,
)


def main() -> None:
    print("== address names ==")
    for addr, loc in [
        ("10.0.1.5", Locality.INTERNAL),
        ("10.0.1.6", Locality.INTERNAL),
        ("8.8.8.8", Locality.EXTERNAL),
    ]:
        name = name_for_ip(addr, loc)
        print(f"{addr:>12} ({loc.name.lower():8}) -> {render_name(name)}")

    print()
    print("== subnet scopes cover their addresses ==")
    scope24 = subnet_scope("10.0.1.0/24", Locality.INTERNAL)
    scope8 = subnet_scope("10.0.0.0/8", Locality.INTERNAL)
    target = name_for_ip("10.0.1.5", Locality.INTERNAL)
    print(f"/24 scope: {render_name(scope24)}")
    print(f"/8  scope: {render_name(scope8)}")
    print(f"both cover 10.0.1.5:",
          is_ancestor(scope24, target), is_ancestor(scope8, target))
    print("neither covers 10.9.9.9:",
          is_ancestor(scope24, name_for_ip("10.9.9.9", Locality.INTERNAL)))

    print()
    print("== the external scope ==")
    o = external_scope()
    print(f"border gateways subscribe once to {render_name(o)}")
    print("covers 8.8.8.8 (external):",
          is_ancestor(o, name_for_ip("8.8.8.8", Locality.EXTERNAL)))
    print("covers 10.0.1.5 (internal):",
          is_ancestor(o, name_for_ip("10.0.1.5", Locality.INTERNAL)))

    print()
    print("== HTTP names ==")
    req = name_for_http("cdn.example", HttpRole.REQUEST, "/videos/42")
    resp = name_for_http("cdn.example", HttpRole.RESPONSE, "/videos/42")
    print(f"request : {render_name(req)}")
    print(f"response: {render_name(resp)}")
    print("only the role scope differs; host and URL hash identically")

    print()
    print("== the textual form round-trips ==")
    text = render_name(target)
    print(f"parse(render(name)) == name: {parse_name(text) == target}")


if __name__ == "__main__":
    main()
