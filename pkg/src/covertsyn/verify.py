"""Checks on synthesized attackers and the end-to-end pipeline."""
from __future__ import annotations

from dataclasses import dataclass, field

from .automata import Automaton, Witness, bounded_equal, find_path, marked_reachable, sync_product
from .constructions import (
    EMBEDDED_MODE,
    PLAIN_MODE,
    Scenario,
    attacked_monitor,
    bt_attacked_supervisor,
    surrogate_plant,
)
from .synthesis import EMPTY, SynthesisResult, attacker_problem, synthesize_safe

TWO_STEP = "two-step"
EMBEDDED = "embedded"

SUCCESS = "success"
UNVERIFIED = "unverified"


def attacker_control(scn: Scenario) -> tuple[frozenset[str], frozenset[str]]:
    """The attacker's (controllable, observable) events on the surrogate plant."""
    return scn.attack.attacker_controllable(), scn.attack.attacker_observable()


def damage_product(scn: Scenario, attacker: Automaton) -> Automaton:
    return sync_product(scn.gt, scn.mot, scn.gsa, scn.gaf, attacker, scn.bt_sdown, scn.gce,
                        name="damage-check")


def verify_damage_reachability(scn: Scenario, attacker: Automaton) -> tuple[bool, Witness | None]:
    """Marked-string test against the under-approximating supervisor.

    True means the attacker reaches damage against every supervisor
    consistent with the log; the converse holds when Σ_c ⊆ Σ_o.
    """
    w = marked_reachable(damage_product(scn, attacker))
    return w is not None, w


def monitor_product(scn: Scenario, attacker: Automaton) -> Automaton:
    """Right-hand side of the product identity, with the S↓ monitor in place of M_O^T and G_AF."""
    return sync_product(scn.gt, scn.bt_sdown, scn.ma_sdown, scn.gsa, scn.gce, attacker,
                        name="monitor-check")


def compare_products(scn: Scenario, attacker: Automaton, k: int) -> tuple[bool, Witness | None]:
    return bounded_equal(damage_product(scn, attacker), monitor_product(scn, attacker), k)


def verify_equality_products(scn: Scenario, attacker: Automaton, k: int) -> bool:
    return compare_products(scn, attacker, k)[0]


@dataclass(frozen=True)
class CovertnessCheck:
    covert: bool
    witness: Witness | None
    damage_reachable: bool
    damage_witness: Witness | None
    detection_reachable: bool
    product_states: int


def covertness_check(scn: Scenario, attacker: Automaton, supervisor: Automaton | None = None) -> CovertnessCheck:
    """Attacked closed loop of a concrete supervisor, searched for exposure and damage.

    Exposure is a monitor cell of ∅ (or the halted state after it) while the
    plant is not yet damaged. Reaching the supervisor's own detection state
    is reported separately.
    """
    if supervisor is None:
        bt, ma = scn.bt_concrete, scn.ma_concrete
    else:
        sup = scn.control.tag(supervisor)
        bt = bt_attacked_supervisor(sup, scn.attack, scn.gamma, scn.control)
        ma = attacked_monitor(sup, scn.plant, scn.attack, scn.gamma, scn.control)
    loop = sync_product(scn.gt, bt, ma, scn.gsa, scn.gce, attacker, name="attacked-loop")
    q_bad = scn.gt.state(scn.bad_state)
    exposed = {ma.state(frozenset()), len(ma) - 1}
    x_detect = len(bt) - 1
    parts = loop.parts
    w = find_path(loop, lambda i: parts[i][2] in exposed and parts[i][0] != q_bad)
    dmg = find_path(loop, lambda i: parts[i][0] == q_bad)
    detect = any(st[1] == x_detect for st in parts)
    return CovertnessCheck(w is None, w, dmg is not None, dmg, detect, len(loop))


def verify_covertness_against(scn: Scenario, attacker: Automaton) -> tuple[bool, Witness | None]:
    """(covert, exposing witness) against the scenario's concrete supervisor."""
    c = covertness_check(scn, attacker)
    return c.covert, c.witness


@dataclass(eq=False)
class VerificationReport:
    mode: str
    status: str
    synthesis: SynthesisResult
    surrogate_states: int
    covert: bool = False
    covert_witness: Witness | None = None
    damage_reachable: bool = False
    damage_witness: Witness | None = None
    concrete: CovertnessCheck | None = None
    products_built: dict[str, int] = field(default_factory=dict)

    @property
    def attacker(self) -> Automaton | None:
        """The synthesized attacker; None when no successful attacker was found."""
        return None if self.status == EMPTY else self.synthesis.attacker

    @property
    def closed_loop(self) -> Automaton | None:
        return None if self.status == EMPTY else self.synthesis.closed_loop

    @property
    def ok(self) -> bool:
        return self.status == SUCCESS

    def as_kv(self) -> dict[str, str]:
        def flag(b):
            return "true" if b else "false"

        kv = {
            "status": self.status,
            "covert": flag(self.covert),
            "damage_reachable": flag(self.damage_reachable),
            "attacker_states": str(len(self.attacker)) if self.attacker is not None else "0",
            "surrogate_states": str(self.surrogate_states),
            "witness": str(self.damage_witness) if self.damage_witness is not None else "-",
            "mode": self.mode,
        }
        if self.concrete is not None:
            kv["concrete_covert"] = flag(self.concrete.covert)
            kv["concrete_damage_reachable"] = flag(self.concrete.damage_reachable)
            kv["concrete_detection_reachable"] = flag(self.concrete.detection_reachable)
        for name, n in sorted(self.products_built.items()):
            kv[f"states.{name}"] = str(n)
        return kv

    def render_text(self) -> str:
        lines = [f"mode: {self.mode}", f"status: {self.status}",
                 f"surrogate plant: {self.surrogate_states} states"]
        stats = self.synthesis.stats
        lines.append("synthesis: " + ", ".join(f"{k}={v}" for k, v in sorted(stats.items())))
        if self.attacker is None:
            lines.append("no safe attacker exists")
            return "\n".join(lines) + "\n"
        lines.append(f"attacker: {len(self.attacker)} states")
        lines.append(f"damage reachable against every consistent supervisor: "
                     f"{'yes' if self.damage_reachable else 'no'}")
        if self.damage_witness is not None:
            lines.append(f"  witness: {self.damage_witness}")
        lines.append(f"covert: {'yes' if self.covert else 'no'}")
        if self.covert_witness is not None:
            lines.append(f"  exposing run: {self.covert_witness}")
        if self.concrete is not None:
            c = self.concrete
            lines.append(f"concrete supervisor: covert={c.covert} damage={c.damage_reachable} "
                         f"detection-state-reachable={c.detection_reachable} ({c.product_states} states)")
            if c.damage_witness is not None:
                lines.append(f"  damage run: {c.damage_witness}")
        for name, n in sorted(self.products_built.items()):
            lines.append(f"product {name}: {n} states")
        return "\n".join(lines) + "\n"


def pipeline(scn: Scenario, mode: str = EMBEDDED) -> VerificationReport:
    """Synthesize an attacker and certify it.

    two-step: synthesize on the plain surrogate, then run the marked-string
    test. embedded: synthesize on the surrogate that already contains the
    completed attacked S↓ and command execution; success is a marked string
    in the resulting closed loop.
    """
    if mode not in (TWO_STEP, EMBEDDED):
        raise ValueError(f"unknown pipeline mode {mode!r}")
    surrogate, bad = surrogate_plant(scn, PLAIN_MODE if mode == TWO_STEP else EMBEDDED_MODE)
    ctrl, obs = attacker_control(scn)
    result = synthesize_safe(attacker_problem(surrogate, bad, ctrl, obs))
    report = VerificationReport(mode, EMPTY, result, len(surrogate),
                                products_built={"surrogate": len(surrogate)})
    if not result.nonempty:
        return report
    attacker = result.attacker
    report.products_built["closed_loop"] = len(result.closed_loop)
    if mode == TWO_STEP:
        ok, w = verify_damage_reachability(scn, attacker)
    else:
        w = marked_reachable(result.closed_loop)
        ok = w is not None
    report.damage_reachable, report.damage_witness = ok, w
    if not ok:
        report.status = UNVERIFIED if mode == TWO_STEP else EMPTY
        return report
    report.covert = True
    report.status = SUCCESS
    if scn.supervisor is not None:
        c = covertness_check(scn, attacker)
        report.concrete = c
        report.products_built["attacked_loop"] = c.product_states
        report.covert, report.covert_witness = c.covert, c.witness
        if not (c.covert and c.damage_reachable):
            report.status = UNVERIFIED
    return report
