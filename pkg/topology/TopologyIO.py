"""JSON codecs for physical and virtual topology documents."""
import json
import math
from typing import Any

from core.Errors import FormatError, ValidationError
from topology.Topology import (
    ChannelClass, Link, MiddleboxSpec, NodeKind, PhysicalTopology, PhysNode, PowerParams,
    RequestTransform, VirtualTopology, VLinkSpec, VmSpec, validate, validate_virtual,
)

NODE_FIELDS = {"id", "kind", "cores", "mips_per_core", "p_idle_w", "p_peak_w"}
LINK_FIELDS = {"a", "b", "capacity_bps", "latency_s"}
VM_FIELDS = {"id", "type", "mips_per_core", "cores", "bandwidth_bps"}
MIDDLEBOX_FIELDS = VM_FIELDS | {"transform"}
TRANSFORM_FIELDS = {"set_dst", "size_factor"}
VLINK_FIELDS = {"id", "src", "dst", "bandwidth_bps", "max_latency_s", "class"}


def _read(document) -> Any:
    if hasattr(document, "read"):
        document = document.read()
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatError(f"document is not utf-8: {e}") from e
    try:
        return json.loads(document)
    except json.JSONDecodeError as e:
        raise FormatError(e.msg, line=e.lineno) from e


def _check_keys(obj, allowed: set[str], required: set[str], where: str):
    if not isinstance(obj, dict):
        raise FormatError("expected an object", field=where)
    for key in obj:
        if key not in allowed:
            raise FormatError(f"unknown field '{key}'", field=where)
    for key in sorted(required):
        if key not in obj:
            raise FormatError(f"missing field '{key}'", field=where)


def _str(obj: dict, key: str, where: str) -> str:
    value = obj[key]
    if not isinstance(value, str) or not value:
        raise FormatError("expected a non-empty string", field=f"{where}.{key}")
    return value


def _num(obj: dict, key: str, where: str, default=None):
    if key not in obj:
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise FormatError("expected a finite number", field=f"{where}.{key}")
    return value


def _int(obj: dict, key: str, where: str, default=None):
    if key not in obj:
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise FormatError("expected an integer", field=f"{where}.{key}")
    return value


def _list(doc: dict, key: str) -> list:
    value = doc.get(key, [])
    if not isinstance(value, list):
        raise FormatError("expected a list", field=key)
    return value


def parse_physical(doc: Any) -> PhysicalTopology:
    _check_keys(doc, {"nodes", "links"}, {"nodes", "links"}, "$")
    nodes = []
    for i, raw in enumerate(_list(doc, "nodes")):
        where = f"nodes[{i}]"
        _check_keys(raw, NODE_FIELDS, {"id", "kind"}, where)
        try:
            kind = NodeKind(raw["kind"])
        except ValueError:
            raise FormatError(f"unknown node kind {raw['kind']!r}", field=f"{where}.kind") from None
        if kind == NodeKind.HOST:
            power = PowerParams(_num(raw, "p_idle_w", where, PowerParams.p_idle),
                                _num(raw, "p_peak_w", where, PowerParams.p_peak))
            nodes.append(PhysNode(_str(raw, "id", where), kind, _int(raw, "cores", where),
                                  _num(raw, "mips_per_core", where), power))
        else:
            # Switches with compute fields are kept so validate() can report them.
            power = None
            if "p_idle_w" in raw or "p_peak_w" in raw:
                power = PowerParams(_num(raw, "p_idle_w", where, 0.0), _num(raw, "p_peak_w", where, 0.0))
            nodes.append(PhysNode(_str(raw, "id", where), kind, _int(raw, "cores", where),
                                  _num(raw, "mips_per_core", where), power))

    links = []
    for i, raw in enumerate(_list(doc, "links")):
        where = f"links[{i}]"
        _check_keys(raw, LINK_FIELDS, LINK_FIELDS, where)
        links.append(Link(_str(raw, "a", where), _str(raw, "b", where),
                          _num(raw, "capacity_bps", where), _num(raw, "latency_s", where)))
    return PhysicalTopology(tuple(nodes), tuple(links))


def load_physical(document) -> PhysicalTopology:
    """Parse and validate a physical topology document (bytes, str or file object)."""
    pt = parse_physical(_read(document))
    report = validate(pt)
    if not report.ok:
        raise ValidationError("; ".join(report.messages()), report)
    return pt


def _parse_vm(raw: dict, where: str, middlebox: bool) -> VmSpec:
    _check_keys(raw, MIDDLEBOX_FIELDS if middlebox else VM_FIELDS, VM_FIELDS, where)
    fields = dict(
        id=_str(raw, "id", where),
        type_name=_str(raw, "type", where),
        mips_per_core=_num(raw, "mips_per_core", where),
        cores=_int(raw, "cores", where),
        bandwidth_bps=_num(raw, "bandwidth_bps", where),
    )
    if not middlebox:
        return VmSpec(**fields)
    transform = RequestTransform()
    if "transform" in raw:
        t = raw["transform"]
        _check_keys(t, TRANSFORM_FIELDS, set(), f"{where}.transform")
        set_dst = t.get("set_dst")
        if set_dst is not None and not isinstance(set_dst, str):
            raise FormatError("expected a string", field=f"{where}.transform.set_dst")
        transform = RequestTransform(set_dst, _num(t, "size_factor", f"{where}.transform"))
    return MiddleboxSpec(**fields, transform=transform)


def parse_virtual(doc: Any) -> VirtualTopology:
    _check_keys(doc, {"vms", "middleboxes", "vlinks"}, {"vms"}, "$")
    vms = tuple(_parse_vm(raw, f"vms[{i}]", False) for i, raw in enumerate(_list(doc, "vms")))
    mbs = tuple(_parse_vm(raw, f"middleboxes[{i}]", True) for i, raw in enumerate(_list(doc, "middleboxes")))
    vlinks = []
    for i, raw in enumerate(_list(doc, "vlinks")):
        where = f"vlinks[{i}]"
        _check_keys(raw, VLINK_FIELDS, {"id", "src", "dst", "bandwidth_bps"}, where)
        try:
            cls = ChannelClass(raw.get("class", ChannelClass.STANDARD.value))
        except ValueError:
            raise FormatError(f"unknown channel class {raw['class']!r}", field=f"{where}.class") from None
        vlinks.append(VLinkSpec(_str(raw, "id", where), _str(raw, "src", where), _str(raw, "dst", where),
                                _num(raw, "bandwidth_bps", where), _num(raw, "max_latency_s", where), cls))
    return VirtualTopology(vms, mbs, tuple(vlinks))


def load_virtual(document) -> VirtualTopology:
    vt = parse_virtual(_read(document))
    report = validate_virtual(vt)
    if not report.ok:
        raise ValidationError("; ".join(report.messages()), report)
    return vt


def physical_to_dict(pt: PhysicalTopology) -> dict:
    nodes = []
    for n in pt.nodes:
        entry = {"id": n.id, "kind": n.kind.value}
        if n.cores is not None:
            entry["cores"] = n.cores
        if n.mips_per_core is not None:
            entry["mips_per_core"] = n.mips_per_core
        if n.power is not None:
            entry["p_idle_w"] = n.power.p_idle
            entry["p_peak_w"] = n.power.p_peak
        nodes.append(entry)
    links = [{"a": l.a, "b": l.b, "capacity_bps": l.capacity_bps, "latency_s": l.latency_s} for l in pt.links]
    return {"nodes": nodes, "links": links}


def virtual_to_dict(vt: VirtualTopology) -> dict:
    def vm_entry(vm: VmSpec) -> dict:
        return {"id": vm.id, "type": vm.type_name, "mips_per_core": vm.mips_per_core,
                "cores": vm.cores, "bandwidth_bps": vm.bandwidth_bps}

    mbs = []
    for mb in vt.middleboxes:
        entry = vm_entry(mb)
        transform = {}
        if mb.transform.set_dst is not None:
            transform["set_dst"] = mb.transform.set_dst
        if mb.transform.size_factor is not None:
            transform["size_factor"] = mb.transform.size_factor
        entry["transform"] = transform
        mbs.append(entry)

    vlinks = []
    for v in vt.vlinks:
        entry = {"id": v.id, "src": v.src, "dst": v.dst, "bandwidth_bps": v.bandwidth_bps,
                 "class": v.channel_class.value}
        if v.max_latency_s is not None:
            entry["max_latency_s"] = v.max_latency_s
        vlinks.append(entry)
    return {"vms": [vm_entry(v) for v in vt.vms], "middleboxes": mbs, "vlinks": vlinks}


def dump_physical(pt: PhysicalTopology, indent: int | None = 2) -> str:
    return json.dumps(physical_to_dict(pt), indent=indent)


def dump_virtual(vt: VirtualTopology, indent: int | None = 2) -> str:
    return json.dumps(virtual_to_dict(vt), indent=indent)
