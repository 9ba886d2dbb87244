"""Duplex message channel with a byte-accounted transcript.

The channel is the only state the two parties share. Every send
appends one TranscriptEvent; payloads ride alongside but never appear
in the transcript, so exported transcripts carry sizes and kinds only.
"""

from __future__ import annotations

import enum
import json
import queue
import threading
from dataclasses import asdict, dataclass
from typing import Any

CLIENT = "client"
SERVER = "server"


class EventKind(str, enum.Enum):
    KEYS = "keys"
    ENCRYPTED_MASKS = "encrypted_masks"
    ENCRYPTED_LINEAR_SHARE = "encrypted_linear_share"
    GARBLED_CIRCUIT = "garbled_circuit"
    LABELS = "labels"
    OT_MESSAGE = "ot_message"
    MASKED_TENSOR = "masked_tensor"
    OUTPUT_LABELS = "output_labels"


@dataclass(frozen=True)
class TranscriptEvent:
    seq: int
    phase: str  # offline | online
    direction: str  # c2s | s2c
    kind: EventKind
    nbytes: int
    stored_by_receiver: bool
    label: str


class ProtocolHang(RuntimeError):
    """A party waited too long for its peer."""


class Transcript:
    def __init__(self):
        self.events: list[TranscriptEvent] = []

    def total_bytes(self, phase: str | None = None, direction: str | None = None) -> int:
        return sum(
            e.nbytes
            for e in self.events
            if (phase is None or e.phase == phase)
            and (direction is None or e.direction == direction)
        )

    def stored_bytes(self, receiver: str, phase: str = "offline") -> int:
        direction = "c2s" if receiver == SERVER else "s2c"
        return sum(
            e.nbytes
            for e in self.events
            if e.phase == phase and e.direction == direction and e.stored_by_receiver
        )

    def kinds(self, phase: str | None = None) -> set[EventKind]:
        return {e.kind for e in self.events if phase is None or e.phase == phase}

    def to_jsonl(self) -> str:
        lines = []
        for e in self.events:
            rec = asdict(e)
            rec["kind"] = e.kind.value
            lines.append(json.dumps(rec, sort_keys=True))
        return "\n".join(lines) + "\n"


class Channel:
    """Two blocking queues plus the shared transcript."""

    def __init__(self, timeout: float = 30.0):
        self.transcript = Transcript()
        self.timeout = timeout
        self.phase = "offline"
        self._lock = threading.Lock()
        self._queues = {CLIENT: queue.Queue(), SERVER: queue.Queue()}

    def set_phase(self, phase: str) -> None:
        self.phase = phase

    def send(
        self,
        sender: str,
        kind: EventKind,
        payload: Any,
        nbytes: int,
        stored_by_receiver: bool = False,
        label: str = "",
    ) -> None:
        receiver = SERVER if sender == CLIENT else CLIENT
        with self._lock:
            event = TranscriptEvent(
                seq=len(self.transcript.events),
                phase=self.phase,
                direction="c2s" if sender == CLIENT else "s2c",
                kind=kind,
                nbytes=int(nbytes),
                stored_by_receiver=stored_by_receiver,
                label=label,
            )
            self.transcript.events.append(event)
        self._queues[receiver].put((event, payload))

    def receive(self, receiver: str, expect: EventKind | None = None):
        try:
            event, payload = self._queues[receiver].get(timeout=self.timeout)
        except queue.Empty:
            raise ProtocolHang(f"{receiver} timed out waiting for a message") from None
        if expect is not None and event.kind is not expect:
            raise ProtocolHang(
                f"{receiver} expected {expect.value}, got {event.kind.value}"
            )
        return event, payload
