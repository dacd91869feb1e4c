"""Cycle-level reference simulator with a performance-event callback sink.

Execution model: single hardware thread, one instruction in flight at a time
(each instruction runs to retirement before the next issues); the DMA engine
runs asynchronously alongside. A DMA's base latency is constant and is
overlapped freely across slots; transfer intervals on one link (source/dest
space pair) never overlap and are scheduled FIFO in base-done order.

Memory ordering is made timing-independent by two rules:
  * a DMA snapshots its source bytes at issue;
  * any instruction touching bytes that an in-flight DMA will write stalls
    (a "hazard" stall) until that DMA completes; its destination bytes become
    visible atomically at complete_cycle.
Together these guarantee that changing timing parameters never changes
architectural results.
"""

from __future__ import annotations

import heapq
import hashlib
import json
import math
import struct
from dataclasses import dataclass, field, fields
from typing import List, Optional

from . import _kernels
from .isa import (CMP_MODES, DMA_DIRS, MXU_TILE_BYTES, VLEN_BYTES,
                  DEFAULT_HBM_CAPACITY, DEFAULT_VMEM_CAPACITY, Fault,
                  Instruction, MachineState, MemRegion, MemSpace, Opcode,
                  Program, RegClass, Unit, instruction_io_sets)

_LINK_NAMES = {(MemSpace.HBM, MemSpace.VMEM): "hbm>vmem",
               (MemSpace.VMEM, MemSpace.HBM): "vmem>hbm",
               (MemSpace.VMEM, MemSpace.VMEM): "vmem>vmem",
               (MemSpace.HBM, MemSpace.HBM): "hbm>hbm"}
_NAME_LINKS = {v: k for k, v in _LINK_NAMES.items()}


def link_name(link) -> str:
    return _LINK_NAMES[link]


@dataclass
class SimConfig:
    """Timing and sizing knobs. The hash of the timing fields is embedded in
    traces so replays refuse to run under a different clock."""

    t_base: int = 100                       # DMA base latency, cycles
    link_bandwidth: dict = field(default_factory=lambda: {
        "hbm>vmem": 32, "vmem>hbm": 32, "vmem>vmem": 32, "hbm>hbm": 32})
    unit_latency: dict = field(default_factory=lambda: {
        "SALU": 1, "VALU": 2, "LSU": 3, "MXU": 32, "DMA": 1, "CTRL": 1})
    vmem_capacity: int = DEFAULT_VMEM_CAPACITY
    hbm_capacity: int = DEFAULT_HBM_CAPACITY

    def __post_init__(self):
        if self.t_base <= 0:
            raise ValueError("t_base must be positive")
        for k, v in self.link_bandwidth.items():
            if k not in _NAME_LINKS:
                raise ValueError(f"unknown link {k!r}")
            if v <= 0:
                raise ValueError(f"bandwidth for {k} must be positive")
        for u in Unit:
            if self.unit_latency.get(u.value, 0) <= 0:
                raise ValueError(f"missing/invalid latency for {u.value}")

    def bandwidth(self, link) -> int:
        return self.link_bandwidth[_LINK_NAMES[link]]

    def latency(self, unit: Unit) -> int:
        return self.unit_latency[unit.value]

    def to_json(self) -> dict:
        return {"t_base": self.t_base,
                "link_bandwidth": dict(sorted(self.link_bandwidth.items())),
                "unit_latency": dict(sorted(self.unit_latency.items())),
                "vmem_capacity": self.vmem_capacity,
                "hbm_capacity": self.hbm_capacity}

    @staticmethod
    def from_json(d: dict) -> "SimConfig":
        base = SimConfig()
        return SimConfig(
            t_base=d.get("t_base", base.t_base),
            link_bandwidth={**base.link_bandwidth, **d.get("link_bandwidth", {})},
            unit_latency={**base.unit_latency, **d.get("unit_latency", {})},
            vmem_capacity=d.get("vmem_capacity", base.vmem_capacity),
            hbm_capacity=d.get("hbm_capacity", base.hbm_capacity))

    def config_hash(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def make_state(self) -> MachineState:
        return MachineState(self.vmem_capacity, self.hbm_capacity)


# Performance event kinds (cycle order within a log is nondecreasing).
INSTR_ISSUE = "instr_issue"
INSTR_RETIRE = "instr_retire"
UNIT_BUSY = "unit_busy"
STALL_BEGIN = "stall_begin"
STALL_END = "stall_end"
DMA_ISSUE_EV = "dma_issue"
DMA_BASE_DONE = "dma_base_done"
DMA_TRANSFER_START = "dma_transfer_start"
DMA_COMPLETE = "dma_complete"
REG_READ = "reg_read"
REG_WRITE = "reg_write"
MEM_READ = "mem_read"
MEM_WRITE = "mem_write"

STALL_HAZARD = "hazard"
STALL_DMA_BASE = "dma_base"
STALL_DMA_TRANSFER = "dma_transfer"

EVENT_KINDS = frozenset({INSTR_ISSUE, INSTR_RETIRE, UNIT_BUSY, STALL_BEGIN,
                         STALL_END, DMA_ISSUE_EV, DMA_BASE_DONE,
                         DMA_TRANSFER_START, DMA_COMPLETE, REG_READ,
                         REG_WRITE, MEM_READ, MEM_WRITE})


@dataclass(slots=True)
class PerfEvent:
    cycle: int
    kind: str
    pc: Optional[int] = None
    idx: Optional[int] = None
    opcode: Optional[str] = None
    unit: Optional[str] = None
    reg: Optional[str] = None
    region: Optional[MemRegion] = None
    src_region: Optional[MemRegion] = None
    dst_region: Optional[MemRegion] = None
    slot: Optional[int] = None
    dma_id: Optional[int] = None
    link: Optional[str] = None
    size: Optional[int] = None
    reason: Optional[str] = None
    until: Optional[int] = None
    annulled: Optional[bool] = None

    def to_json(self) -> dict:
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, MemRegion):
                v = v.to_json()
            d[f.name] = v
        return d

    @staticmethod
    def from_json(d: dict) -> "PerfEvent":
        kw = dict(d)
        if kw["kind"] not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kw['kind']!r}")
        for name in ("region", "src_region", "dst_region"):
            if name in kw:
                kw[name] = MemRegion.from_json(kw[name])
        return PerfEvent(**kw)


class PerfTracker:
    """Observational callback sink; must never affect architectural results."""

    def on_event(self, ev: PerfEvent):
        raise NotImplementedError


class NullTracker(PerfTracker):
    def on_event(self, ev: PerfEvent):
        pass


class RecordingTracker(PerfTracker):
    def __init__(self):
        self.events: List[PerfEvent] = []

    def on_event(self, ev: PerfEvent):
        self.events.append(ev)


def events_to_jsonl(events, summary: Optional[dict] = None) -> str:
    lines = [json.dumps(ev.to_json(), sort_keys=True) for ev in events]
    if summary is not None:
        lines.append(json.dumps({"kind": "summary", **summary}, sort_keys=True))
    return "\n".join(lines) + "\n"


def events_from_jsonl(text: str):
    """Returns (events, summary_or_None)."""
    events, summary = [], None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        d = json.loads(line)
        if d.get("kind") == "summary":
            summary = d
        else:
            events.append(PerfEvent.from_json(d))
    return events, summary


@dataclass
class DmaTransfer:
    """Per-DMA timeline entry collected by the simulator (ground truth for
    the event-log based analyzer)."""

    dma_id: int
    slot: int
    link: str
    size: int
    src: MemRegion
    dst: MemRegion
    issue_index: int
    issue_pc: int
    issue_cycle: int
    base_done_cycle: int
    transfer_start_cycle: int
    complete_cycle: int
    wait_cycle: Optional[int] = None
    wait_index: Optional[int] = None
    later_wait_cycles: list = field(default_factory=list)


@dataclass
class StepOutcome:
    pc: int
    index: int
    instr: Optional[Instruction]
    issue_cycle: int = 0
    retire_cycle: int = 0
    annulled: bool = False
    halted: bool = False
    fault: Optional[Fault] = None


@dataclass
class RunResult:
    outcome: str                  # "halted" | "budget" | "fault"
    state: MachineState
    cycles: int
    executed: int
    dma_history: List[DmaTransfer]
    stall_cycles: dict
    fault: Optional[Fault] = None

    @property
    def total_stall(self) -> int:
        return sum(self.stall_cycles.values())


class Simulator:
    """Executes instructions against a MachineState, reporting events to a
    tracker. One instance per state; not thread-safe."""

    def __init__(self, config: SimConfig, state: Optional[MachineState] = None,
                 program: Optional[Program] = None,
                 tracker: Optional[PerfTracker] = None):
        self.config = config
        self.state = state if state is not None else config.make_state()
        self.program = program
        self.tracker = tracker if tracker is not None else NullTracker()
        self._emit = not isinstance(self.tracker, NullTracker)
        self.dma_history: List[DmaTransfer] = []
        self._by_dma_id = {}
        self.stream_index = 0
        self.stall_cycles = {STALL_HAZARD: 0, STALL_DMA_BASE: 0, STALL_DMA_TRANSFER: 0}
        self._pending: list = []   # (cycle, seq, PerfEvent)
        self._pseq = 0

    # -- event plumbing ------------------------------------------------------

    def _queue(self, ev: PerfEvent):
        heapq.heappush(self._pending, (ev.cycle, self._pseq, ev))
        self._pseq += 1

    def _flush(self, upto: int):
        while self._pending and self._pending[0][0] <= upto:
            self.tracker.on_event(heapq.heappop(self._pending)[2])

    def _send(self, ev: PerfEvent):
        self._flush(ev.cycle)
        self.tracker.on_event(ev)

    # -- DMA engine ----------------------------------------------------------

    def _advance_engine(self, upto: int):
        for slot in self.state.dma_slots:
            if slot.active and not slot.applied and slot.complete_cycle <= upto:
                self.state.write_mem(slot.dst, slot.buffer)
                slot.applied = True
                slot.buffer = b""

    def sync(self):
        """Apply completed transfers and flush queued events up to now."""
        self._advance_engine(self.state.cycle)
        if self._emit:
            self._flush(self.state.cycle)

    # -- execution -----------------------------------------------------------

    def step(self) -> StepOutcome:
        state = self.state
        if state.halted:
            return StepOutcome(state.pc, self.stream_index, None, halted=True)
        if self.program is None or not 0 <= state.pc < len(self.program):
            f = Fault("pc_oob", f"pc {state.pc} outside program", state.pc)
            state.halted = True
            return StepOutcome(state.pc, self.stream_index, None, fault=f, halted=True)
        return self.exec_instruction(self.program.instructions[state.pc], state.pc)

    def run(self, max_cycles: int) -> RunResult:
        if max_cycles <= 0:
            raise ValueError("max_cycles must be positive")
        fault = None
        while not self.state.halted:
            if self.state.cycle >= max_cycles:
                self.sync()
                return RunResult("budget", self.state, self.state.cycle,
                                 self.stream_index, self.dma_history,
                                 dict(self.stall_cycles))
            out = self.step()
            if out.fault is not None:
                fault = out.fault
                break
        self.sync()
        outcome = "fault" if fault is not None else "halted"
        return RunResult(outcome, self.state, self.state.cycle,
                         self.stream_index, self.dma_history,
                         dict(self.stall_cycles), fault)

    def exec_instruction(self, instr: Instruction, pc: int) -> StepOutcome:
        """Execute one instruction to retirement; advances cycle by
        issue-wait plus unit latency."""
        state = self.state
        idx = self.stream_index
        start = state.cycle
        emit = self._emit
        try:
            ios = instruction_io_sets(instr, state, pc)
        except Fault as f:
            state.halted = True
            return StepOutcome(pc, idx, instr, fault=f, halted=True)

        annulled = instr.predicate is not None and not state.pregs[instr.predicate.index]
        op = instr.opcode

        if annulled:
            issue = start
            retire = issue + 1
            if emit:
                self._send(PerfEvent(issue, REG_READ, pc=pc, idx=idx,
                                     reg=str(instr.predicate)))
                self._send(PerfEvent(issue, INSTR_ISSUE, pc=pc, idx=idx,
                                     opcode=op.name, unit=instr.unit.value,
                                     annulled=True))
                self._send(PerfEvent(retire, INSTR_RETIRE, pc=pc, idx=idx))
            state.cycle = retire
            state.pc = pc + 1
            self.stream_index += 1
            return StepOutcome(pc, idx, instr, issue, retire, annulled=True)

        # Hazard interlock: touching bytes an in-flight DMA will write blocks
        # until that DMA completes (keeps results timing-independent).
        issue = start
        if ios.input_mem or ios.output_mem:
            for slot in state.dma_slots:
                if slot.active and not slot.applied:
                    for r in ios.input_mem:
                        if r.overlaps(slot.dst):
                            issue = max(issue, slot.complete_cycle)
                    for r in ios.output_mem:
                        if r.overlaps(slot.dst):
                            issue = max(issue, slot.complete_cycle)
        if issue > start:
            self.stall_cycles[STALL_HAZARD] += issue - start
            if emit:
                self._send(PerfEvent(start, STALL_BEGIN, pc=pc, idx=idx,
                                     reason=STALL_HAZARD))
                self._send(PerfEvent(issue, STALL_END, pc=pc, idx=idx,
                                     reason=STALL_HAZARD))
        self._advance_engine(issue)

        try:
            out = self._execute(instr, pc, idx, issue, ios, emit)
        except Fault as f:
            state.halted = True
            return StepOutcome(pc, idx, instr, issue, fault=f, halted=True)
        self.stream_index += 1
        return out

    def _execute(self, instr, pc, idx, issue, ios, emit) -> StepOutcome:
        state = self.state
        cfg = self.config
        op = instr.opcode
        unit = instr.unit
        latency = cfg.latency(unit)
        exec_at = issue
        next_pc = pc + 1
        reg_writes = []            # (RegisterId,) written at retire
        mem_writes = []            # regions written at retire
        issue_extra = {}

        if op is Opcode.S_LDI:
            state.write_sreg(instr.dst_regs[0].index, instr.immediates[0])
            reg_writes.append(instr.dst_regs[0])
        elif op is Opcode.S_ADD or op is Opcode.S_MUL:
            a = state.sregs[instr.src_regs[0].index]
            b = state.sregs[instr.src_regs[1].index]
            v = a + b if op is Opcode.S_ADD else a * b
            state.write_sreg(instr.dst_regs[0].index, v)
            reg_writes.append(instr.dst_regs[0])
        elif op is Opcode.S_CMP:
            a = state.read_sreg_signed(instr.src_regs[0].index)
            b = state.read_sreg_signed(instr.src_regs[1].index)
            mode = CMP_MODES[instr.immediates[0]]
            res = {"eq": a == b, "ne": a != b, "lt": a < b,
                   "le": a <= b, "gt": a > b, "ge": a >= b}[mode]
            state.pregs[instr.dst_regs[0].index] = int(res)
            reg_writes.append(instr.dst_regs[0])
        elif op is Opcode.S_MOV:
            src = instr.src_regs[0]
            if src.cls is RegClass.SCALAR:
                state.sregs[instr.dst_regs[0].index] = state.sregs[src.index]
            else:
                off = src.index * VLEN_BYTES + instr.immediates[0] * 4
                state.sregs[instr.dst_regs[0].index] = \
                    struct.unpack_from("<I", state.vregs, off)[0]
            reg_writes.append(instr.dst_regs[0])
        elif op is Opcode.V_ADD or op is Opcode.V_MUL:
            fn = _kernels.v_add if op is Opcode.V_ADD else _kernels.v_mul
            fn(state.vregs,
               instr.dst_regs[0].index * VLEN_BYTES,
               instr.src_regs[0].index * VLEN_BYTES,
               instr.src_regs[1].index * VLEN_BYTES)
            reg_writes.append(instr.dst_regs[0])
        elif op is Opcode.V_LOAD:
            data = state.read_mem(ios.input_mem[0])
            o = instr.dst_regs[0].index * VLEN_BYTES
            state.vregs[o:o + VLEN_BYTES] = data
            reg_writes.append(instr.dst_regs[0])
        elif op is Opcode.V_STORE:
            o = instr.src_regs[1].index * VLEN_BYTES
            state.write_mem(ios.output_mem[0], bytes(state.vregs[o:o + VLEN_BYTES]))
            mem_writes.append(ios.output_mem[0])
        elif op is Opcode.MXU_MM:
            d, a, b = (state.sregs[r.index] for r in instr.src_regs)
            _kernels.mxu_mm(state.vmem, d, a, b)
            mem_writes.append(ios.output_mem[0])
        elif op is Opcode.BR:
            next_pc = instr.immediates[0]
        elif op is Opcode.BRZ:
            if not state.pregs[instr.src_regs[0].index]:
                next_pc = instr.immediates[0]
        elif op is Opcode.HALT:
            state.halted = True
        elif op is Opcode.DMA_ISSUE:
            return self._exec_dma_issue(instr, pc, idx, issue, ios, emit)
        elif op is Opcode.DMA_WAIT:
            return self._exec_dma_wait(instr, pc, idx, issue, emit)
        else:
            raise Fault("decode", f"unhandled opcode {op!r}", pc)

        retire = exec_at + latency
        if emit:
            self._send(PerfEvent(issue, INSTR_ISSUE, pc=pc, idx=idx,
                                 opcode=op.name, unit=unit.value, **issue_extra))
            for r in ios.input_regs:
                self._send(PerfEvent(issue, REG_READ, pc=pc, idx=idx, reg=str(r)))
            for m in ios.input_mem:
                self._send(PerfEvent(issue, MEM_READ, pc=pc, idx=idx, region=m))
            self._send(PerfEvent(exec_at, UNIT_BUSY, pc=pc, idx=idx,
                                 unit=unit.value, until=retire))
            for r in reg_writes:
                self._send(PerfEvent(retire, REG_WRITE, pc=pc, idx=idx, reg=str(r)))
            for m in mem_writes:
                self._send(PerfEvent(retire, MEM_WRITE, pc=pc, idx=idx, region=m))
            self._send(PerfEvent(retire, INSTR_RETIRE, pc=pc, idx=idx))
        state.cycle = retire
        state.pc = next_pc
        return StepOutcome(pc, idx, instr, issue, retire, halted=state.halted)

    def _exec_dma_issue(self, instr, pc, idx, issue, ios, emit) -> StepOutcome:
        state = self.state
        cfg = self.config
        slot_no = instr.immediates[0]
        slot = state.dma_slots[slot_no]
        if slot.active:
            raise Fault("dma_busy", f"DMA_ISSUE on busy slot {slot_no}", pc)
        src, dst = ios.input_mem[0], ios.output_mem[0]
        link = (src.space, dst.space)
        base_done = issue + cfg.t_base
        t_start = max(base_done, state.link_free.get(link, 0))
        complete = t_start + math.ceil(src.length / cfg.bandwidth(link))
        state.link_free[link] = complete

        slot.active = True
        slot.applied = False
        slot.src, slot.dst = src, dst
        slot.issue_cycle, slot.base_done_cycle = issue, base_done
        slot.transfer_start_cycle, slot.complete_cycle = t_start, complete
        slot.buffer = state.read_mem(src)
        slot.dma_id = state.dma_seq
        slot.issue_index, slot.issue_pc = idx, pc
        state.dma_seq += 1

        xfer = DmaTransfer(slot.dma_id, slot_no, link_name(link), src.length,
                           src, dst, idx, pc, issue, base_done, t_start, complete)
        self.dma_history.append(xfer)
        self._by_dma_id[slot.dma_id] = xfer

        retire = issue + cfg.latency(Unit.DMA)
        if emit:
            self._send(PerfEvent(issue, INSTR_ISSUE, pc=pc, idx=idx,
                                 opcode=instr.opcode.name, unit="DMA",
                                 slot=slot_no, dma_id=slot.dma_id))
            for r in ios.input_regs:
                self._send(PerfEvent(issue, REG_READ, pc=pc, idx=idx, reg=str(r)))
            self._send(PerfEvent(issue, MEM_READ, pc=pc, idx=idx, region=src,
                                 dma_id=slot.dma_id))
            self._send(PerfEvent(issue, DMA_ISSUE_EV, pc=pc, idx=idx,
                                 slot=slot_no, dma_id=slot.dma_id,
                                 link=link_name(link), size=src.length,
                                 src_region=src, dst_region=dst))
            self._queue(PerfEvent(base_done, DMA_BASE_DONE, idx=idx,
                                  slot=slot_no, dma_id=slot.dma_id))
            self._queue(PerfEvent(t_start, DMA_TRANSFER_START, idx=idx,
                                  slot=slot_no, dma_id=slot.dma_id))
            self._queue(PerfEvent(complete, DMA_COMPLETE, idx=idx,
                                  slot=slot_no, dma_id=slot.dma_id))
            self._queue(PerfEvent(complete, MEM_WRITE, pc=pc, idx=idx,
                                  region=dst, dma_id=slot.dma_id))
            self._send(PerfEvent(issue, UNIT_BUSY, pc=pc, idx=idx, unit="DMA",
                                 until=retire))
            self._send(PerfEvent(retire, INSTR_RETIRE, pc=pc, idx=idx))
        state.cycle = retire
        state.pc = pc + 1
        return StepOutcome(pc, idx, instr, issue, retire)

    def _exec_dma_wait(self, instr, pc, idx, issue, emit) -> StepOutcome:
        state = self.state
        slot_no = instr.immediates[0]
        slot = state.dma_slots[slot_no]
        if slot.dma_id < 0:
            raise Fault("dma_wait_idle", f"DMA_WAIT on idle slot {slot_no}", pc)
        xfer = self._by_dma_id[slot.dma_id]
        complete = slot.complete_cycle
        base_done = slot.base_done_cycle
        first_wait = slot.active

        if emit:
            self._send(PerfEvent(issue, INSTR_ISSUE, pc=pc, idx=idx,
                                 opcode=instr.opcode.name, unit="DMA",
                                 slot=slot_no, dma_id=slot.dma_id))
        exec_at = issue
        if first_wait and issue < complete:
            if issue < base_done:
                self.stall_cycles[STALL_DMA_BASE] += base_done - issue
                if emit:
                    self._send(PerfEvent(issue, STALL_BEGIN, pc=pc, idx=idx,
                                         reason=STALL_DMA_BASE, dma_id=slot.dma_id,
                                         slot=slot_no))
                    self._send(PerfEvent(base_done, STALL_END, pc=pc, idx=idx,
                                         reason=STALL_DMA_BASE, dma_id=slot.dma_id,
                                         slot=slot_no))
                if complete > base_done:
                    self.stall_cycles[STALL_DMA_TRANSFER] += complete - base_done
                    if emit:
                        self._send(PerfEvent(base_done, STALL_BEGIN, pc=pc, idx=idx,
                                             reason=STALL_DMA_TRANSFER,
                                             dma_id=slot.dma_id, slot=slot_no))
                        self._send(PerfEvent(complete, STALL_END, pc=pc, idx=idx,
                                             reason=STALL_DMA_TRANSFER,
                                             dma_id=slot.dma_id, slot=slot_no))
            else:
                self.stall_cycles[STALL_DMA_TRANSFER] += complete - issue
                if emit:
                    self._send(PerfEvent(issue, STALL_BEGIN, pc=pc, idx=idx,
                                         reason=STALL_DMA_TRANSFER,
                                         dma_id=slot.dma_id, slot=slot_no))
                    self._send(PerfEvent(complete, STALL_END, pc=pc, idx=idx,
                                         reason=STALL_DMA_TRANSFER,
                                         dma_id=slot.dma_id, slot=slot_no))
            exec_at = complete
        self._advance_engine(exec_at)
        retire = exec_at + self.config.latency(Unit.DMA)

        if first_wait:
            xfer.wait_cycle = issue
            xfer.wait_index = idx
            slot.active = False     # slot stays associated until re-issued
        else:
            xfer.later_wait_cycles.append(issue)
        if emit:
            self._send(PerfEvent(exec_at, UNIT_BUSY, pc=pc, idx=idx, unit="DMA",
                                 until=retire))
            self._send(PerfEvent(retire, INSTR_RETIRE, pc=pc, idx=idx))
        state.cycle = retire
        state.pc = pc + 1
        return StepOutcome(pc, idx, instr, issue, retire)


def dma_timeline(history: List[DmaTransfer]) -> List[dict]:
    """Per-DMA timeline from a completed run's slot history."""
    return [{"dma_id": x.dma_id, "slot": x.slot, "link": x.link, "size": x.size,
             "issue_cycle": x.issue_cycle, "base_done_cycle": x.base_done_cycle,
             "transfer_start_cycle": x.transfer_start_cycle,
             "complete_cycle": x.complete_cycle, "wait_cycle": x.wait_cycle}
            for x in history]


def run_program(program: Program, config: SimConfig,
                state: Optional[MachineState] = None,
                tracker: Optional[PerfTracker] = None,
                max_cycles: int = 10_000_000) -> RunResult:
    sim = Simulator(config, state, program, tracker)
    sim.state.pc = program.entry_pc
    return sim.run(max_cycles)


def state_digest(state: MachineState, written_regs=None, written_mem=None) -> str:
    """Digest of architectural state. With footprints given, only the written
    locations (plus pc/halted) contribute, which lets a replay that starts
    from a zeroed machine be compared against the live run it mirrors."""
    h = hashlib.sha256()
    h.update(struct.pack("<I?", state.pc & 0xFFFFFFFF, state.halted))
    if written_regs is None and written_mem is None:
        h.update(struct.pack("<32I", *state.sregs))
        h.update(bytes(state.vregs))
        h.update(bytes(state.pregs))
        h.update(bytes(state.vmem))
        for page in sorted(state.hbm._pages):
            h.update(struct.pack("<Q", page))
            h.update(bytes(state.hbm._pages[page]))
        return "full:" + h.hexdigest()
    for r in sorted(written_regs or (), key=str):
        h.update(str(r).encode())
        h.update(state.read_reg_bytes(r))
    for space in (MemSpace.VMEM, MemSpace.HBM):
        spans = (written_mem or {}).get(space)
        if not spans:
            continue
        for s, e in spans:
            h.update(f"{space.value}:{s}:{e}".encode())
            h.update(state.read_mem(MemRegion(space, s, e - s)))
    return "window:" + h.hexdigest()
