"""SMT solver sessions over an external SMT-LIB 2.6 process.

The session keeps a replay journal (preamble, declarations, persistent
push/pop) so it can transparently restart the child process after a crash;
individual validity queries run inside transient push/pop scopes.
"""

from __future__ import annotations

import os
import queue
import shutil
import subprocess
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

from . import terms as tm
from .errors import SolverUnavailable


class QueryResult(Enum):
    VALID = "valid"
    NOT_VALID = "not-valid"
    UNKNOWN = "unknown"


def find_solver(explicit: Optional[str] = None) -> list[str]:
    """Resolve the solver command line: --solver flag, MINIGO_SOLVER, z3 on
    PATH, or the bundled WASM shim."""
    candidates: list[str] = []
    if explicit:
        candidates.append(explicit)
    env = os.environ.get("MINIGO_SOLVER")
    if env:
        candidates.append(env)
    for cand in candidates:
        if cand.endswith(".js"):
            node = shutil.which("node")
            if node and Path(cand).exists():
                return [node, cand]
            continue
        path = shutil.which(cand) or (cand if Path(cand).exists() else None)
        if path:
            return [path, "-in"] if Path(path).name.startswith("z3") else [path]
    z3 = shutil.which("z3")
    if z3:
        return [z3, "-in"]
    # bundled shim: tools/z3shim relative to the repository root
    here = Path(__file__).resolve()
    for base in [Path.cwd()] + list(here.parents):
        shim = base / "tools" / "z3shim" / "z3-stdio.js"
        if shim.exists() and (shim.parent / "node_modules").exists():
            node = shutil.which("node")
            if node:
                return [node, str(shim)]
    raise SolverUnavailable(
        "no SMT solver found: install z3, set MINIGO_SOLVER, or run "
        "`npm install` in tools/z3shim")


@dataclass
class SolverStats:
    queries: int = 0
    restarts: int = 0


class SolverSession:
    """One solver process; push/pop scoped; restart-transparent."""

    def __init__(self, cmd: list[str], preamble: str = "",
                 timeout_ms: int = 10_000,
                 dump_dir: Optional[str] = None) -> None:
        self.cmd = cmd
        self.preamble = preamble
        self.timeout_ms = timeout_ms
        self.dump_dir = dump_dir
        self.stats = SolverStats()
        self.journal: list[str] = []
        self.depth = 0
        self._sync = 0
        self._proc: Optional[subprocess.Popen] = None
        self._lines: "queue.Queue[Optional[str]]" = queue.Queue()
        self._spawn()
        self._send_setup()

    # ── process management ───────────────────────────────────────

    def _spawn(self) -> None:
        try:
            self._proc = subprocess.Popen(
                self.cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL, text=True, bufsize=1)
        except OSError as exc:
            raise SolverUnavailable(f"cannot start solver {self.cmd}: {exc}")
        self._lines = queue.Queue()
        reader = threading.Thread(target=self._read_loop,
                                  args=(self._proc,), daemon=True)
        reader.start()

    def _read_loop(self, proc: subprocess.Popen) -> None:
        assert proc.stdout is not None
        for line in proc.stdout:
            self._lines.put(line.rstrip("\n"))
        self._lines.put(None)

    def _send_setup(self) -> None:
        setup = self.preamble + f"\n(set-option :timeout {self.timeout_ms})\n"
        self._write(setup)
        if self._drain_sync(timeout=120.0) is None:
            raise SolverUnavailable("solver did not answer during setup")

    def _write(self, text: str) -> None:
        assert self._proc is not None and self._proc.stdin is not None
        try:
            self._proc.stdin.write(text)
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError):
            pass

    def _drain_sync(self, timeout: float) -> Optional[list[str]]:
        """Send a sync marker and collect output lines until it echoes."""
        self._sync += 1
        marker = f"SYNC{self._sync}"
        self._write(f'(echo "{marker}")\n')
        collected: list[str] = []
        while True:
            try:
                line = self._lines.get(timeout=timeout)
            except queue.Empty:
                return None
            if line is None:
                return None
            if line.strip() == marker:
                return collected
            collected.append(line.strip())

    def _restart(self) -> None:
        self.stats.restarts += 1
        if self._proc is not None:
            try:
                self._proc.kill()
            except OSError:
                pass
        self._spawn()
        self._send_setup()
        if self.journal:
            self._write("\n".join(self.journal) + "\n")
            self._drain_sync(timeout=120.0)

    def close(self) -> None:
        if self._proc is not None:
            self._write("(exit)\n")
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
            self._proc = None

    # ── persistent scope (journaled) ─────────────────────────────

    def declare_const(self, name: str, sort: str) -> None:
        cmd = f"(declare-const {name} {sort})"
        self.journal.append(cmd)
        self._write(cmd + "\n")

    def add_assert(self, t: tm.Term) -> None:
        cmd = f"(assert {tm.smt(t)})"
        self.journal.append(cmd)
        self._write(cmd + "\n")

    def push(self) -> None:
        self.depth += 1
        self.journal.append("(push 1)")
        self._write("(push 1)\n")

    def pop(self) -> None:
        if self.depth == 0:
            raise RuntimeError("solver pop below zero")
        self.depth -= 1
        # drop the journal back to the matching push
        level = 0
        for i in range(len(self.journal) - 1, -1, -1):
            entry = self.journal[i]
            if entry == "(pop 1)":
                level += 1
            elif entry == "(push 1)":
                if level == 0:
                    del self.journal[i:]
                    break
                level -= 1
        self._write("(pop 1)\n")

    # ── queries (transient) ──────────────────────────────────────

    def fresh(self, sort: str, prefix: str = "k") -> tm.Term:
        name = tm.fresh_name(prefix)
        self.declare_const(name, sort)
        return tm.const(name, sort)

    def _dump(self, body: list[str]) -> None:
        if not self.dump_dir:
            return
        os.makedirs(self.dump_dir, exist_ok=True)
        path = os.path.join(self.dump_dir, f"query{self.stats.queries:05d}.smt2")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.preamble + "\n")
            fh.write("\n".join(self.journal) + "\n")
            fh.write("\n".join(body) + "\n")

    def _run_check(self, asserts: list[tm.Term]) -> str:
        self.stats.queries += 1
        body = ["(push 1)"]
        body.extend(f"(assert {tm.smt(t)})" for t in asserts)
        body.append("(check-sat)")
        self._dump(body + ["(pop 1)"])
        self._write("\n".join(body) + "\n")
        wall = max(self.timeout_ms / 1000.0 * 3, 10.0)
        lines = self._drain_sync(timeout=wall)
        if lines is None:
            self._restart()
            return "unknown"
        self._write("(pop 1)\n")
        answer = "unknown"
        for line in lines:
            if line in ("sat", "unsat", "unknown"):
                answer = line
            elif line.startswith("(error"):
                raise RuntimeError(f"solver error: {line}")
        return answer

    def check_valid(self, hypotheses: list[tm.Term], goal: tm.Term) -> QueryResult:
        """Valid iff hypotheses ∧ ¬goal is unsatisfiable."""
        if tm.is_true(goal):
            return QueryResult.VALID
        answer = self._run_check(list(hypotheses) + [tm.mk_not(goal)])
        if answer == "unsat":
            return QueryResult.VALID
        if answer == "sat":
            return QueryResult.NOT_VALID
        return QueryResult.UNKNOWN

    def check_sat(self, hypotheses: list[tm.Term]) -> str:
        """'sat' | 'unsat' | 'unknown' for the conjunction."""
        return self._run_check(list(hypotheses))
