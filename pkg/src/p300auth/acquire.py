"""Session recordings, the session CSV format and the line-oriented stream ingester.

The stream protocol replaces a real LSL link::

    EEGSTREAM v1 channels=8 rate=256
    S,<t_ms>,<v1>,...,<v8>
    M,<t_ms>,<1|2>
    END

Markers carry the code used in the CSV ``stimulus`` column (1 = non-target,
2 = target) and are aligned to the sample with the nearest timestamp.
"""
from __future__ import annotations

import csv
import logging
import queue
import re
import socket
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

CHANNELS = ("Fp1", "Fp2", "C3", "C4", "P7", "P8", "O1", "O2")
SAMPLE_RATE = 256
TARGET = "target"
NON_TARGET = "non_target"
STIMULUS_CODES = {NON_TARGET: 1, TARGET: 2}
CODE_TO_KIND = {v: k for k, v in STIMULUS_CODES.items()}
CSV_HEADER = ("timestamp_ms",) + CHANNELS + ("stimulus",)
HANDSHAKE = f"EEGSTREAM v1 channels={len(CHANNELS)} rate={SAMPLE_RATE}"


class SessionFormatError(ValueError):
    """A session file or stream violates the recording format."""


class ProtocolError(SessionFormatError):
    """The stream peer sent a bad handshake or a malformed frame."""


@dataclass(frozen=True)
class StimulusEvent:
    sample_index: int
    kind: str

    def __post_init__(self):
        if self.kind not in STIMULUS_CODES:
            raise ValueError(f"unknown stimulus kind {self.kind!r}")


@dataclass
class SessionRecording:
    """One EEG session: ``samples`` is channels x N in microvolts."""

    subject_id: int
    session_id: int
    timestamps_ms: np.ndarray
    samples: np.ndarray
    markers: list[StimulusEvent]
    sample_rate: int = SAMPLE_RATE
    channel_names: tuple[str, ...] = CHANNELS
    manifest: dict = field(default_factory=dict)

    def __post_init__(self):
        self.timestamps_ms = np.asarray(self.timestamps_ms, dtype=float)
        self.samples = np.asarray(self.samples, dtype=float).reshape(len(self.channel_names), -1)
        self.validate()

    @property
    def n_samples(self) -> int:
        return self.timestamps_ms.shape[0]

    def validate(self) -> None:
        n = self.n_samples
        if self.samples.shape != (len(self.channel_names), n):
            raise SessionFormatError(
                f"samples shape {self.samples.shape} does not match "
                f"{len(self.channel_names)} channels x {n} timestamps")
        if n > 1 and not np.all(np.diff(self.timestamps_ms) > 0):
            raise SessionFormatError("timestamps are not strictly increasing")
        for m in self.markers:
            if not 0 <= m.sample_index < n:
                raise SessionFormatError(f"marker at sample {m.sample_index} outside [0, {n})")

    def stimulus_column(self) -> np.ndarray:
        stim = np.zeros(self.n_samples, dtype=np.int64)
        for m in self.markers:
            stim[m.sample_index] = STIMULUS_CODES[m.kind]
        return stim

    def count(self, kind: str) -> int:
        return sum(m.kind == kind for m in self.markers)

    def with_samples(self, samples: np.ndarray, **manifest) -> SessionRecording:
        """Copy with replaced sample matrix (markers and timing unchanged)."""
        return SessionRecording(self.subject_id, self.session_id, self.timestamps_ms.copy(),
                                samples, list(self.markers), self.sample_rate,
                                self.channel_names, {**self.manifest, **manifest})


def session_timestamps(n_samples: int, sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Millisecond timestamps relative to session start, rounded to 3 decimals."""
    return np.round(np.arange(n_samples) * (1000.0 / sample_rate), 3)


def _format_rows(timestamps: np.ndarray, samples: np.ndarray, stim: np.ndarray) -> str:
    lines = []
    for t, row, s in zip(timestamps, samples.T, stim):
        lines.append(f"{t:.3f}," + ",".join(f"{v:.6f}" for v in row) + f",{s}")
    return "\n".join(lines) + ("\n" if lines else "")


def write_session_csv(rec: SessionRecording, path) -> None:
    """Write ``rec`` as ``timestamp_ms,Fp1,...,O2,stimulus`` (UTF-8, LF)."""
    path = Path(path)
    body = _format_rows(rec.timestamps_ms, rec.samples, rec.stimulus_column())
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(CSV_HEADER) + "\n")
            fh.write(body)
    except OSError as exc:
        raise OSError(f"cannot write session file {path}: {exc}") from exc


_NAME_RE = re.compile(r"s(?P<subject>\d+)_r(?P<session>\d+)")


def read_session_csv(path, subject_id: int | None = None,
                     session_id: int | None = None) -> SessionRecording:
    """Parse a session CSV, validating every row.

    Subject and session ids default to those encoded in a ``sXX_rYY`` file
    name, else 0.
    """
    path = Path(path)
    m = _NAME_RE.search(path.stem)
    if subject_id is None:
        subject_id = int(m["subject"]) if m else 0
    if session_id is None:
        session_id = int(m["session"]) if m else 0

    ncol = len(CSV_HEADER)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise SessionFormatError(f"{path}:1: bad header {header!r}")
        values, stim = [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != ncol:
                raise SessionFormatError(
                    f"{path}:{lineno}: expected {ncol} columns, got {len(row)}")
            try:
                values.append([float(x) for x in row[:-1]])
                code = int(row[-1])
            except ValueError as exc:
                raise SessionFormatError(f"{path}:{lineno}: malformed row ({exc})") from None
            if code not in (0, 1, 2):
                raise SessionFormatError(f"{path}:{lineno}: bad stimulus code {code}")
            stim.append(code)

    arr = np.asarray(values, dtype=float).reshape(-1, ncol - 1)
    ts = arr[:, 0]
    bad = np.flatnonzero(np.diff(ts) <= 0)
    if bad.size:
        raise SessionFormatError(
            f"{path}:{bad[0] + 3}: timestamps not strictly increasing")
    markers = [StimulusEvent(int(i), CODE_TO_KIND[c]) for i, c in enumerate(stim) if c]
    return SessionRecording(subject_id, session_id, ts, arr[:, 1:].T.copy(), markers,
                            manifest={"source": str(path)})


# -- stream ingestion -------------------------------------------------------


def parse_endpoint(endpoint: str) -> tuple[str, int]:
    host, _, port = endpoint.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"endpoint must be HOST:PORT, got {endpoint!r}")
    return host, int(port)


def _reader(sock: socket.socket, lines: queue.Queue, timeout: float) -> None:
    # single producer: push decoded lines, then None on close or error
    sock.settimeout(timeout)
    buf = b""
    try:
        while True:
            chunk = sock.recv(65536)
            if not chunk:
                break
            buf += chunk
            *complete, buf = buf.split(b"\n")
            for raw in complete:
                lines.put(raw.decode("utf-8").rstrip("\r"))
        if buf:
            lines.put(buf.decode("utf-8").rstrip("\r"))
    except (OSError, UnicodeDecodeError) as exc:
        lines.put(exc)
    finally:
        lines.put(None)


def _parse_handshake(line: str) -> None:
    m = re.fullmatch(r"EEGSTREAM v1 channels=(\d+) rate=(\d+)", line or "")
    if not m:
        raise ProtocolError(f"bad handshake {line!r}")
    if int(m[1]) != len(CHANNELS):
        raise ProtocolError(f"handshake advertises {m[1]} channels, expected {len(CHANNELS)}")
    if int(m[2]) != SAMPLE_RATE:
        raise ProtocolError(f"handshake advertises rate {m[2]}, expected {SAMPLE_RATE}")


def assemble(frames: list[str], subject_id: int = 0, session_id: int = 0,
             duration_s: float | None = None) -> SessionRecording:
    """Build a recording from the frames following the handshake.

    Stops at ``END``, or at the first sample beyond ``duration_s``.  A stream
    without a terminator yields a recording flagged ``truncated``.
    """
    ts, rows, marks = [], [], []
    terminated = False
    for k, line in enumerate(frames):
        if line == "END":
            terminated = True
            break
        parts = line.split(",")
        try:
            if parts[0] == "S" and len(parts) == len(CHANNELS) + 2:
                t = float(parts[1])
                if duration_s is not None and t >= duration_s * 1000.0:
                    terminated = True
                    break
                ts.append(t)
                rows.append([float(v) for v in parts[2:]])
            elif parts[0] == "M" and len(parts) == 3 and parts[2] in ("1", "2"):
                marks.append((float(parts[1]), int(parts[2])))
            else:
                raise ProtocolError(f"frame {k + 2}: malformed {line!r}")
        except ValueError as exc:
            if isinstance(exc, ProtocolError):
                raise
            raise ProtocolError(f"frame {k + 2}: malformed {line!r}") from None

    t_arr = np.asarray(ts, dtype=float)
    samples = np.asarray(rows, dtype=float).reshape(-1, len(CHANNELS)).T
    markers = []
    for t, code in marks:
        if t_arr.size == 0:
            break
        i = int(np.searchsorted(t_arr, t))
        if i == t_arr.size or (i > 0 and t - t_arr[i - 1] <= t_arr[i] - t):
            i -= 1
        markers.append(StimulusEvent(i, CODE_TO_KIND[code]))
    manifest = {"truncated": not terminated}
    if not terminated:
        manifest["warnings"] = ["stream closed before END; recording truncated"]
        logger.warning("stream closed before END after %d samples", t_arr.size)
    return SessionRecording(subject_id, session_id, t_arr, samples, markers, manifest=manifest)


def stream_ingest(endpoint: str, duration_s: float, subject_id: int = 0, session_id: int = 0,
                  timeout: float = 10.0, ready: threading.Event | None = None) -> SessionRecording:
    """Listen on ``endpoint``, accept one stream and return its recording.

    A reader thread pushes lines onto a queue while this thread consumes them.
    ``ready`` is set once the socket is listening.
    """
    host, port = parse_endpoint(endpoint)
    with socket.create_server((host, port)) as server:
        server.settimeout(timeout)
        if ready is not None:
            ready.set()
        try:
            conn, _ = server.accept()
        except socket.timeout:
            raise TimeoutError(f"no stream connected to {endpoint} within {timeout} s") from None
        with conn:
            lines: queue.Queue = queue.Queue()
            worker = threading.Thread(target=_reader, args=(conn, lines, timeout), daemon=True)
            worker.start()
            first = lines.get()
            if isinstance(first, Exception):
                raise ConnectionError(f"stream from {endpoint} failed: {first}")
            _parse_handshake(first)
            frames = []
            limit_ms = duration_s * 1000.0
            while True:
                item = lines.get()
                if item is None:
                    break
                if isinstance(item, Exception):
                    logger.warning("stream read error: %s", item)
                    break
                frames.append(item)
                if item == "END" or (item.startswith("S,") and _frame_time(item) >= limit_ms):
                    break
    rec = assemble(frames, subject_id, session_id, duration_s)
    rec.manifest["source"] = f"tcp://{endpoint}"
    return rec


def _frame_time(line: str) -> float:
    try:
        return float(line.split(",", 2)[1])
    except (IndexError, ValueError):
        return float("-inf")


def session_frames(rec: SessionRecording) -> list[str]:
    """Protocol lines (handshake to ``END``) replaying ``rec``."""
    stim = rec.stimulus_column()
    out = [HANDSHAKE]
    for t, row, s in zip(rec.timestamps_ms, rec.samples.T, stim):
        out.append(f"S,{t:.3f}," + ",".join(f"{v:.6f}" for v in row))
        if s:
            out.append(f"M,{t:.3f},{s}")
    out.append("END")
    return out


def replay(rec: SessionRecording, endpoint: str, connect_timeout: float = 10.0,
           realtime: bool = False, stop_after: int | None = None) -> None:
    """Send ``rec`` to a listening ingester.

    ``stop_after`` closes the connection after that many sample frames
    without sending ``END``.
    """
    host, port = parse_endpoint(endpoint)
    deadline = time.monotonic() + connect_timeout
    while True:
        try:
            sock = socket.create_connection((host, port), timeout=connect_timeout)
            break
        except ConnectionRefusedError:
            if time.monotonic() > deadline:
                raise
            time.sleep(0.05)
    frames = session_frames(rec)
    if stop_after is not None:
        kept, n = [frames[0]], 0
        for line in frames[1:]:
            if line.startswith("S,"):
                if n == stop_after:
                    break
                n += 1
            if line != "END":
                kept.append(line)
        frames = kept
    with sock:
        if realtime:
            t0 = time.monotonic()
            for line in frames:
                if line.startswith("S,"):
                    delay = _frame_time(line) / 1000.0 - (time.monotonic() - t0)
                    if delay > 0:
                        time.sleep(delay)
                sock.sendall((line + "\n").encode())
        else:
            sock.sendall(("\n".join(frames) + "\n").encode())
