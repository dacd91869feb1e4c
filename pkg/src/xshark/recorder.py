"""Execution recorder: captures a replayable window as first-use inputs plus
the executed instruction stream.

Per dynamic instruction, in this order: parse the input registers and memory
regions; save the value of every input register not yet used as an output
(and not already saved) and the still-uncovered byte sub-intervals of every
input region; then add the instruction's outputs to the used sets; then step.
Intermediate results are never captured - the replayer reconstructs them.
An instruction that both reads and writes a location therefore snapshots the
pre-step value.

The trace container is a single JSON file (header + base64 snapshot blobs +
hex instruction stream + sha256 checksum); a compact binary variant sits
behind the same reader. See docs/trace-format.md.
"""

from __future__ import annotations

import base64
import hashlib
import json
import struct
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .debugger import Breakpoint, DebugSession
from .intervals import IntervalSet
from .isa import (INSTR_BYTES, ISA_VERSION, Fault, MemRegion, MemSpace,
                  RegClass, RegisterId, decode_instruction, encode_instruction,
                  instruction_io_sets)

TRACE_MAGIC = b"XTRC"
TRACE_VERSION = 1


class TraceError(Exception):
    """Trace container problem. `code` is stable: TRACE_FORMAT,
    TRACE_CHECKSUM, TRACE_VERSION, TRACE_CONFIG_MISMATCH."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class TraceHeader:
    isa_version: int
    sim_config_hash: str
    start_pc: int
    start_cycle: int
    instruction_count: int
    ended_at_halt: bool = False
    fault_kind: Optional[str] = None

    def to_json(self):
        return {"isa_version": self.isa_version,
                "sim_config_hash": self.sim_config_hash,
                "start_pc": self.start_pc, "start_cycle": self.start_cycle,
                "instruction_count": self.instruction_count,
                "ended_at_halt": self.ended_at_halt,
                "fault_kind": self.fault_kind}

    @staticmethod
    def from_json(d):
        return TraceHeader(d["isa_version"], d["sim_config_hash"],
                           d["start_pc"], d["start_cycle"],
                           d["instruction_count"], d.get("ended_at_halt", False),
                           d.get("fault_kind"))


@dataclass
class ExecutionTrace:
    header: TraceHeader
    reg_snapshots: List[Tuple[RegisterId, bytes]]
    mem_snapshots: List[Tuple[MemRegion, bytes]]
    instr_stream: List[Tuple[int, bytes]]      # (pc, 16-byte encoding)

    def validate(self):
        seen = set()
        for r, data in self.reg_snapshots:
            if r in seen:
                raise TraceError("TRACE_FORMAT", f"duplicate register snapshot {r}")
            seen.add(r)
            if len(data) != r.width_bytes:
                raise TraceError("TRACE_FORMAT", f"snapshot width mismatch for {r}")
        cover = {MemSpace.VMEM: IntervalSet(), MemSpace.HBM: IntervalSet()}
        for region, data in self.mem_snapshots:
            if len(data) != region.length:
                raise TraceError("TRACE_FORMAT", f"snapshot width mismatch for {region}")
            if cover[region.space].overlaps(region.offset, region.end):
                raise TraceError("TRACE_FORMAT", f"overlapping memory snapshot {region}")
            cover[region.space].add(region.offset, region.end)
        if self.header.instruction_count != len(self.instr_stream):
            raise TraceError("TRACE_FORMAT", "instruction count mismatch")
        for _, raw in self.instr_stream:
            if len(raw) != INSTR_BYTES:
                raise TraceError("TRACE_FORMAT", "bad instruction record length")

    @property
    def snapshot_bytes(self) -> int:
        return (sum(len(d) for _, d in self.reg_snapshots)
                + sum(len(d) for _, d in self.mem_snapshots))

    def decoded_stream(self):
        return [(pc, decode_instruction(raw)) for pc, raw in self.instr_stream]


@dataclass
class RecordResult:
    trace: ExecutionTrace
    written_regs: frozenset                    # live write footprint (the used sets)
    written_mem: Dict[MemSpace, list]          # space -> [(start, end)]
    recorded: int = 0
    ended_at_halt: bool = False
    fault: Optional[Fault] = None


def record(session: DebugSession, breakpoint: Optional[Breakpoint],
           n_instructions: int, fast_forward_dma: bool = False,
           max_cycles: int = 10_000_000) -> RecordResult:
    """Run to the breakpoint (if given), then record up to n_instructions.

    Recording refuses to start while a DMA is in flight unless
    fast_forward_dma is set, in which case the session steps on until the
    engine is quiescent. Traces must be self-contained.
    """
    if n_instructions <= 0:
        raise ValueError("n_instructions must be positive")
    if breakpoint is not None:
        bp_id = session.set_breakpoint(breakpoint)
        res = session.continue_until_break(max_cycles)
        session.clear_breakpoint(bp_id)
        if not res.hit:
            raise Fault("bp_not_hit",
                        f"breakpoint at pc={breakpoint.pc} not reached ({res.outcome})")

    inflight = [i for i, s in enumerate(session.state.dma_slots) if s.active]
    if inflight:
        if not fast_forward_dma:
            raise Fault("dma_inflight",
                        f"recording with DMAs in flight on slots {inflight}; "
                        "pass fast_forward_dma to run to quiescence")
        while any(s.active for s in session.state.dma_slots):
            out = session.step()
            if out.fault is not None or out.halted or session.state.cycle >= max_cycles:
                raise Fault("dma_inflight", "could not reach DMA quiescence")

    state = session.state
    start_pc, start_cycle = state.pc, state.cycle
    used_regs = set()                            # R: output registers so far
    covered = {MemSpace.VMEM: IntervalSet(), MemSpace.HBM: IntervalSet()}
    written = {MemSpace.VMEM: IntervalSet(), MemSpace.HBM: IntervalSet()}
    reg_snaps: List[Tuple[RegisterId, bytes]] = []
    snapped_regs = set()
    mem_snaps: List[Tuple[MemRegion, bytes]] = []
    stream: List[Tuple[int, bytes]] = []
    ended_at_halt = False
    fault = None

    for _ in range(n_instructions):
        instr = session.peek()
        if instr is None:
            ended_at_halt = True
            break
        pc = state.pc
        try:
            ios = instruction_io_sets(instr, state, pc)
        except Fault as f:
            fault = f
            break
        for r in ios.input_regs:
            if r not in used_regs and r not in snapped_regs:
                reg_snaps.append((r, session.read_register(r)))
                snapped_regs.add(r)
        for m in ios.input_mem:
            for s, e in covered[m.space].uncovered(m.offset, m.end):
                piece = MemRegion(m.space, s, e - s)
                mem_snaps.append((piece, session.read_memory(piece)))
                covered[m.space].add(s, e)
        for r in ios.output_regs:
            used_regs.add(r)
        for m in ios.output_mem:
            covered[m.space].add(m.offset, m.end)
            written[m.space].add(m.offset, m.end)

        out = session.step()
        if out.fault is not None:
            fault = out.fault
            break
        stream.append((pc, encode_instruction(instr)))
        if out.halted:
            ended_at_halt = True
            break

    session.sim.sync()
    # bytes an in-flight DMA has not materialized yet are not part of the
    # window's architectural delta
    for slot in state.dma_slots:
        if slot.active and not slot.applied:
            written[slot.dst.space].remove(slot.dst.offset, slot.dst.end)

    header = TraceHeader(ISA_VERSION, session.config.config_hash(), start_pc,
                         start_cycle, len(stream), ended_at_halt,
                         fault.kind if fault else None)
    trace = ExecutionTrace(header, reg_snaps, mem_snaps, stream)
    trace.validate()
    return RecordResult(trace, frozenset(used_regs),
                        {sp: list(iv) for sp, iv in written.items()},
                        len(stream), ended_at_halt, fault)


# -- container formats ---------------------------------------------------

def _trace_payload(trace: ExecutionTrace) -> dict:
    return {
        "header": trace.header.to_json(),
        "reg_snapshots": [[str(r), base64.b64encode(d).decode()]
                          for r, d in trace.reg_snapshots],
        "mem_snapshots": [[m.to_json(), base64.b64encode(d).decode()]
                          for m, d in trace.mem_snapshots],
        "instr_stream": [[pc, raw.hex()] for pc, raw in trace.instr_stream],
    }


def _payload_checksum(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def trace_to_json(trace: ExecutionTrace) -> str:
    payload = _trace_payload(trace)
    return json.dumps({"format": "xshark-trace", "version": TRACE_VERSION,
                       **payload, "checksum": _payload_checksum(payload)},
                      indent=1)


def trace_to_binary(trace: ExecutionTrace) -> bytes:
    out = bytearray()
    out += TRACE_MAGIC
    out += struct.pack("<H", TRACE_VERSION)
    hdr = json.dumps(trace.header.to_json(), sort_keys=True).encode()
    out += struct.pack("<I", len(hdr)) + hdr
    out += struct.pack("<I", len(trace.reg_snapshots))
    for r, d in trace.reg_snapshots:
        out += struct.pack("<BBH", "svp".index(r.cls.value), r.index, len(d)) + d
    out += struct.pack("<I", len(trace.mem_snapshots))
    for m, d in trace.mem_snapshots:
        out += struct.pack("<BQI", 0 if m.space is MemSpace.HBM else 1,
                           m.offset, m.length) + d
    out += struct.pack("<I", len(trace.instr_stream))
    for pc, raw in trace.instr_stream:
        out += struct.pack("<I", pc) + raw
    out += hashlib.sha256(bytes(out)).digest()
    return bytes(out)


def write_trace(trace: ExecutionTrace, destination: str, binary: bool = False):
    if binary:
        with open(destination, "wb") as fh:
            fh.write(trace_to_binary(trace))
    else:
        with open(destination, "w") as fh:
            fh.write(trace_to_json(trace))


def _trace_from_json(text: str) -> ExecutionTrace:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise TraceError("TRACE_FORMAT", f"not a trace file: {e}") from None
    if doc.get("format") != "xshark-trace":
        raise TraceError("TRACE_FORMAT", "missing xshark-trace format marker")
    if doc.get("version") != TRACE_VERSION:
        raise TraceError("TRACE_VERSION", f"unsupported trace version {doc.get('version')}")
    payload = {k: doc[k] for k in ("header", "reg_snapshots", "mem_snapshots",
                                   "instr_stream")}
    if _payload_checksum(payload) != doc.get("checksum"):
        raise TraceError("TRACE_CHECKSUM", "trace payload checksum mismatch")
    return ExecutionTrace(
        TraceHeader.from_json(doc["header"]),
        [(RegisterId.parse(r), base64.b64decode(d)) for r, d in doc["reg_snapshots"]],
        [(MemRegion.from_json(m), base64.b64decode(d)) for m, d in doc["mem_snapshots"]],
        [(pc, bytes.fromhex(raw)) for pc, raw in doc["instr_stream"]],
    )


def _trace_from_binary(blob: bytes) -> ExecutionTrace:
    if blob[:4] != TRACE_MAGIC:
        raise TraceError("TRACE_FORMAT", "bad magic")
    if hashlib.sha256(blob[:-32]).digest() != blob[-32:]:
        raise TraceError("TRACE_CHECKSUM", "trace payload checksum mismatch")
    (version,) = struct.unpack_from("<H", blob, 4)
    if version != TRACE_VERSION:
        raise TraceError("TRACE_VERSION", f"unsupported trace version {version}")
    pos = 6
    (hlen,) = struct.unpack_from("<I", blob, pos); pos += 4
    header = TraceHeader.from_json(json.loads(blob[pos:pos + hlen])); pos += hlen
    (nreg,) = struct.unpack_from("<I", blob, pos); pos += 4
    regs = []
    classes = [RegClass.SCALAR, RegClass.VECTOR, RegClass.PREDICATE]
    for _ in range(nreg):
        tag, idx, ln = struct.unpack_from("<BBH", blob, pos); pos += 4
        regs.append((RegisterId(classes[tag], idx), blob[pos:pos + ln])); pos += ln
    (nmem,) = struct.unpack_from("<I", blob, pos); pos += 4
    mems = []
    for _ in range(nmem):
        sp, off, ln = struct.unpack_from("<BQI", blob, pos); pos += 13
        mems.append((MemRegion(MemSpace.HBM if sp == 0 else MemSpace.VMEM, off, ln),
                     blob[pos:pos + ln]))
        pos += ln
    (nins,) = struct.unpack_from("<I", blob, pos); pos += 4
    stream = []
    for _ in range(nins):
        (pc,) = struct.unpack_from("<I", blob, pos); pos += 4
        stream.append((pc, blob[pos:pos + INSTR_BYTES])); pos += INSTR_BYTES
    return ExecutionTrace(header, regs, mems, stream)


def read_trace(source: str, expected_config_hash: Optional[str] = None) -> ExecutionTrace:
    with open(source, "rb") as fh:
        blob = fh.read()
    if blob[:4] == TRACE_MAGIC:
        trace = _trace_from_binary(blob)
    else:
        trace = _trace_from_json(blob.decode())
    if trace.header.isa_version != ISA_VERSION:
        raise TraceError("TRACE_VERSION",
                         f"trace ISA version {trace.header.isa_version} != {ISA_VERSION}")
    if (expected_config_hash is not None
            and trace.header.sim_config_hash != expected_config_hash):
        raise TraceError("TRACE_CONFIG_MISMATCH",
                         "trace was recorded under a different SimConfig; replay "
                         "fidelity requires identical timing parameters")
    trace.validate()
    return trace
