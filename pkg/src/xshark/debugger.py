"""Step-debugger facade over the simulator.

Provides exactly the primitives the execution recorder needs: single step,
register/memory reads, and pc breakpoints with optional hit counting.
Breakpoints are plain pc compares in the session loop; reads are pure and
never disturb architectural state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional

from .isa import Fault, Instruction, MachineState, MemRegion, Program, RegisterId
from .sim import PerfTracker, SimConfig, Simulator, StepOutcome


@dataclass(frozen=True)
class Breakpoint:
    pc: int
    hit_count_target: int = 1      # break on the Nth time pc is reached

    def __post_init__(self):
        if self.hit_count_target < 1:
            raise ValueError("hit_count_target must be >= 1")


@dataclass
class ContinueResult:
    hit: bool                      # False: ran to HALT/budget/fault
    breakpoint_id: Optional[int] = None
    outcome: Optional[str] = None  # set when not hit
    fault: Optional[Fault] = None


class DebugSession:
    """One session per simulator instance; externally synchronized."""

    def __init__(self, program: Program, config: SimConfig,
                 state: Optional[MachineState] = None,
                 tracker: Optional[PerfTracker] = None):
        self.program = program
        self.config = config
        self.sim = Simulator(config, state, program, tracker)
        if state is None:
            self.sim.state.pc = program.entry_pc
        self._breakpoints: Dict[int, Breakpoint] = {}
        self._hits: Dict[int, int] = {}
        self._next_bp = 0

    @property
    def state(self) -> MachineState:
        return self.sim.state

    def set_breakpoint(self, bp: Breakpoint) -> int:
        if not 0 <= bp.pc < len(self.program):
            raise Fault("bp_oob", f"breakpoint pc {bp.pc} outside program")
        bp_id = self._next_bp
        self._next_bp += 1
        self._breakpoints[bp_id] = bp
        self._hits[bp_id] = 0
        return bp_id

    def clear_breakpoint(self, bp_id: int):
        self._breakpoints.pop(bp_id, None)
        self._hits.pop(bp_id, None)

    def peek(self) -> Optional[Instruction]:
        """Instruction about to execute, decoded, without stepping."""
        pc = self.state.pc
        if self.state.halted or not 0 <= pc < len(self.program):
            return None
        return self.program.instructions[pc]

    def step(self) -> StepOutcome:
        return self.sim.step()

    def continue_until_break(self, max_cycles: int = 10_000_000) -> ContinueResult:
        """Run until some breakpoint's hit count is reached; halts *before*
        executing the instruction at the breakpoint pc."""
        state = self.state
        while not state.halted:
            if state.cycle >= max_cycles:
                return ContinueResult(False, outcome="budget")
            for bp_id, bp in self._breakpoints.items():
                if state.pc == bp.pc:
                    self._hits[bp_id] += 1
                    if self._hits[bp_id] == bp.hit_count_target:
                        return ContinueResult(True, breakpoint_id=bp_id)
            out = self.sim.step()
            if out.fault is not None:
                return ContinueResult(False, outcome="fault", fault=out.fault)
        return ContinueResult(False, outcome="halted")

    # -- pure reads ----------------------------------------------------------

    def read_register(self, r: RegisterId) -> bytes:
        return self.state.read_reg_bytes(r)

    def read_memory(self, region: MemRegion) -> bytes:
        return self.state.read_mem(region)
