"""
GOOSE Service
Binary codec for status frames and a simulated multicast bus
"""
import logging
import struct
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from dcprotect.exceptions import (
    BadMagicError,
    FrameEncodeError,
    InvalidFieldError,
    LengthMismatchError,
    TruncatedFrameError,
)
from dcprotect.schemas.goose import (
    UINT32_MAX,
    BusConfig,
    DatasetEntry,
    Delivery,
    GooseFrame,
    RetransmitSchedule,
)

logger = logging.getLogger(__name__)

MAGIC = b"GO"
HEADER = struct.Struct(">2sHIIIQB")
ENTRY = struct.Struct(">BIB")
MAX_ENTRIES = 64


class GooseCodec:
    """Fixed big-endian layout: magic, app_id, publisher, stNum, sqNum, timestamp, count, entries"""

    @staticmethod
    def frame_length(count: int) -> int:
        return HEADER.size + ENTRY.size * count

    @staticmethod
    def encode_frame(frame: GooseFrame) -> bytes:
        count = len(frame.dataset)
        if count > MAX_ENTRIES:
            raise FrameEncodeError(f"dataset has {count} entries, at most {MAX_ENTRIES} fit a frame")
        parts = [HEADER.pack(MAGIC, frame.app_id, frame.publisher_id, frame.st_num, frame.sq_num,
                             frame.timestamp, count)]
        parts.extend(ENTRY.pack(e.kind, e.entry_id, 1 if e.value else 0) for e in frame.dataset)
        return b"".join(parts)

    @staticmethod
    def decode_frame(data: bytes) -> GooseFrame:
        """
        Decode one frame

        Total on arbitrary input: every malformed byte string raises a
        FrameDecodeError subclass before anything proportional to the claimed
        entry count is allocated.
        """
        data = bytes(data)
        if len(data) < len(MAGIC):
            raise TruncatedFrameError(f"{len(data)} bytes is shorter than the magic")
        if data[:len(MAGIC)] != MAGIC:
            raise BadMagicError(f"bad magic {data[:len(MAGIC)].hex()}")
        if len(data) < HEADER.size:
            raise TruncatedFrameError(f"{len(data)} bytes is shorter than the {HEADER.size}-byte header")

        _, app_id, publisher, st_num, sq_num, timestamp, count = HEADER.unpack_from(data, 0)
        if count > MAX_ENTRIES:
            raise InvalidFieldError(f"entry count {count} exceeds {MAX_ENTRIES}")
        expected = GooseCodec.frame_length(count)
        if len(data) < expected:
            raise TruncatedFrameError(f"{len(data)} bytes, {count} entries need {expected}")
        if len(data) > expected:
            raise LengthMismatchError(f"{len(data) - expected} trailing bytes after {count} entries")

        entries = []
        for i in range(count):
            kind, entry_id, value = ENTRY.unpack_from(data, HEADER.size + i * ENTRY.size)
            if value not in (0, 1):
                raise InvalidFieldError(f"entry {i}: boolean value byte is {value}")
            entries.append(DatasetEntry(kind=kind, entry_id=entry_id, value=bool(value)))

        return GooseFrame(
            app_id=app_id,
            publisher_id=publisher,
            st_num=st_num,
            sq_num=sq_num,
            timestamp=timestamp,
            dataset=tuple(entries),
        )


class Publisher:
    """stNum/sqNum bookkeeping for one publisher"""

    def __init__(self, publisher_id: int, app_id: int = 1):
        self.publisher_id = publisher_id
        self.app_id = app_id
        self.st_num = 0
        self.sq_num = 0
        self.dataset: Tuple[DatasetEntry, ...] = ()

    def next_frame(self, dataset: Sequence[DatasetEntry], now_ns: int, state_change: bool = True) -> GooseFrame:
        if state_change:
            self.st_num = self.st_num + 1 if self.st_num < UINT32_MAX else 1
            self.sq_num = 0
        else:
            self.sq_num = self.sq_num + 1 if self.sq_num < UINT32_MAX else 0
        self.dataset = tuple(dataset)
        return GooseFrame(
            app_id=self.app_id,
            publisher_id=self.publisher_id,
            st_num=self.st_num,
            sq_num=self.sq_num,
            timestamp=now_ns,
            dataset=self.dataset,
        )


class GooseBus:
    """
    Multicast bus with latency, uniform jitter, independent loss and the
    state-change retransmission burst

    Each (attempt, subscriber) pair takes a loss draw and then a jitter draw
    from one seeded generator, so identical configs and publish sequences give
    identical schedules.
    """

    def __init__(self, config: Optional[BusConfig] = None, schedule: Optional[RetransmitSchedule] = None):
        self.config = config or BusConfig()
        self.schedule = schedule or RetransmitSchedule()
        self.rng = np.random.default_rng(self.config.rng_seed)
        self.subscriptions: Dict[int, List[str]] = {}
        self.names: Dict[int, str] = {}
        self.capture: List[Delivery] = []
        self.published = 0
        self.lost = 0

    def register(self, publisher_id: int, name: str) -> None:
        self.names[publisher_id] = name
        self.subscriptions.setdefault(publisher_id, [])

    def subscribe(self, publisher_id: int, subscribers: Iterable[str]) -> None:
        current = self.subscriptions.setdefault(publisher_id, [])
        for subscriber in subscribers:
            if subscriber not in current:
                current.append(subscriber)

    def _delay_ns(self, send_ns: int) -> Optional[int]:
        config = self.config
        if config.loss_probability > 0 and self.rng.random() < config.loss_probability:
            return None
        delay = config.base_latency + config.security_overhead
        if config.jitter > 0:
            delay += self.rng.uniform(-config.jitter, config.jitter)
        return max(send_ns + round(delay * 1e9), send_ns + 1)

    def publish(self, frame: GooseFrame, now_ns: int, state_change: bool = True) -> List[Delivery]:
        """
        Schedule deliveries of a frame to every subscriber of its publisher

        Args:
            frame: Frame as built by the publisher (sqNum of the first send)
            now_ns: Send time
            state_change: Also schedule the retransmission burst

        Returns:
            Deliveries in scheduling order
        """
        if frame.publisher_id not in self.subscriptions:
            raise ValueError(f"publisher {frame.publisher_id} is not registered on the bus")
        name = self.names.get(frame.publisher_id)
        subscribers = [s for s in self.subscriptions[frame.publisher_id] if s != name]

        sends = [(now_ns, frame)]
        if state_change:
            for k, offset in enumerate(self.schedule.offsets, start=1):
                send_ns = now_ns + round(offset * 1e9)
                sends.append((send_ns, frame.model_copy(update={
                    "sq_num": min(frame.sq_num + k, UINT32_MAX),
                    "timestamp": send_ns,
                })))

        deliveries: List[Delivery] = []
        for send_ns, copy in sends:
            self.published += 1
            for subscriber in subscribers:
                time_ns = self._delay_ns(send_ns)
                if time_ns is None:
                    self.lost += 1
                    continue
                deliveries.append(Delivery(subscriber=subscriber, time_ns=time_ns, frame=copy))
        self.capture.extend(deliveries)
        logger.debug(f"publisher {frame.publisher_id} st={frame.st_num}: {len(deliveries)} deliveries scheduled")
        return deliveries

    def dump_capture(self) -> str:
        """One line per delivery: '<delivery ns> <subscriber> <hex frame>', in delivery order"""
        ordered = sorted(enumerate(self.capture), key=lambda item: (item[1].time_ns, item[0]))
        lines = [f"{d.time_ns} {d.subscriber} {GooseCodec.encode_frame(d.frame).hex()}" for _, d in ordered]
        return "\n".join(lines) + ("\n" if lines else "")


# Singleton
goose_codec = GooseCodec()
