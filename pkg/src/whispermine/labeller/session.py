"""Labelling sessions: snippet state, append-only event history, replay
and export. The HTTP layer in service.py is a thin wrapper around this."""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path

import numpy as np

from ..audio import AudioBuffer, load_wav
from ..datasets import LabelInterval, LabelTrack
from .projection import project_pca, project_tsne
from .snippets import Snippet, snippetize

LABEL_VOCAB = ("clean_whisper", "noisy_whisper", "noise", "other")


class Session:
    """One labelling session over a set of recordings.

    State = snippets + an append-only list of label assignments (undo pops
    the most recent). Everything is reproducible by replaying the event
    log: embeddings and projections are deterministic given the recorded
    seeds.
    """

    def __init__(self, session_id: str, recordings: dict, snippet_ms: int,
                 embedding: str = "mfcc"):
        self.id = session_id
        self.recordings = dict(recordings)  # recording_id -> path
        self.snippet_ms = snippet_ms
        self.embedding = embedding
        self.buffers: dict = {}
        self.snippets: list = []
        self.active_projection = "pca"
        self.projection_seeds: dict = {}
        self.label_events: list = []  # [{"snippet_ids": [...], "label": str}]
        self.lock = threading.RLock()

        for rid in sorted(self.recordings):
            buf = load_wav(self.recordings[rid])
            self.buffers[rid] = buf
            self.snippets.extend(snippetize(buf, rid, snippet_ms, embedding))
        self.by_id = {s.id: s for s in self.snippets}

    # ------------------------------------------------------------ state

    def labels(self) -> dict:
        """Current label per snippet id: the last assignment wins."""
        out: dict = {}
        for ev in self.label_events:
            for sid in ev["snippet_ids"]:
                out[sid] = ev["label"]
        return out

    def assign_labels(self, snippet_ids, label: str) -> int:
        if label not in LABEL_VOCAB:
            raise ValueError(f"label must be one of {LABEL_VOCAB}")
        unknown = [sid for sid in snippet_ids if sid not in self.by_id]
        if unknown:
            raise KeyError(f"unknown snippet ids: {unknown[:5]}")
        with self.lock:
            self.label_events.append({"snippet_ids": list(snippet_ids), "label": label})
            return len(self.label_events)

    def undo(self) -> int:
        with self.lock:
            if not self.label_events:
                raise IndexError("label history is empty")
            self.label_events.pop()
            return len(self.label_events)

    # ------------------------------------------------------------ geometry

    def embeddings(self) -> np.ndarray:
        return np.stack([s.embedding for s in self.snippets])

    def run_projection(self, method: str, seed: int = 0) -> None:
        if method == "pca":
            coords, _, _ = project_pca(self.embeddings())
        elif method == "tsne":
            # scale perplexity down for small sessions; the projection
            # itself insists on perplexity < (n-1)/3
            n = len(self.snippets)
            perplexity = min(30.0, max(1.0, (n - 2) / 3.0))
            coords = project_tsne(self.embeddings(), perplexity=perplexity,
                                  seed=seed).coords
        else:
            raise ValueError(f"unknown projection method {method!r}")
        with self.lock:
            for s, xy in zip(self.snippets, coords):
                s.coords_2d[method] = (float(xy[0]), float(xy[1]))
            self.active_projection = method
            self.projection_seeds[method] = seed

    def points(self) -> list:
        labels = self.labels()
        method = self.active_projection
        out = []
        for s in self.snippets:
            x, y = s.coords_2d.get(method, (0.0, 0.0))
            out.append({
                "id": s.id, "x": x, "y": y,
                "t_start_s": s.t_start_s, "t_end_s": s.t_end_s,
                "recording_id": s.recording_id,
                "label": labels.get(s.id),
            })
        return out

    def snippet_audio(self, snippet_id: str) -> AudioBuffer:
        s = self.by_id[snippet_id]
        buf = self.buffers[s.recording_id]
        a = int(round(s.t_start_s * buf.sample_rate_hz))
        b = int(round(s.t_end_s * buf.sample_rate_hz))
        return AudioBuffer(buf.samples[a:b], buf.sample_rate_hz)

    # ------------------------------------------------------------ export

    def export_tracks(self) -> dict:
        """Per-recording label tracks: adjacent same-label snippets merged,
        unlabelled snippets omitted."""
        labels = self.labels()
        tracks = {}
        for rid in sorted(self.recordings):
            snips = sorted((s for s in self.snippets if s.recording_id == rid),
                           key=lambda s: s.t_start_s)
            intervals = []
            for s in snips:
                lab = labels.get(s.id)
                if lab is None:
                    continue
                if (intervals and intervals[-1].label == lab
                        and abs(intervals[-1].end_s - s.t_start_s) < 1e-9):
                    intervals[-1] = LabelInterval(intervals[-1].start_s, s.t_end_s, lab)
                else:
                    intervals.append(LabelInterval(s.t_start_s, s.t_end_s, lab))
            tracks[rid] = LabelTrack(intervals=intervals)
        return tracks


class SessionStore:
    """Registry plus append-only JSONL event logs; sessions are rebuilt by
    replaying their log."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.sessions: dict = {}
        self.lock = threading.Lock()

    def _log_path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.events.jsonl"

    def _append(self, session_id: str, event: dict) -> None:
        with open(self._log_path(session_id), "a") as fh:
            fh.write(json.dumps(event) + "\n")

    def create(self, recording_paths, snippet_ms: int = 500,
               projection: str = "pca", seed: int = 0,
               embedding: str = "mfcc") -> Session:
        recordings = {}
        for p in recording_paths:
            rid = Path(p).stem
            base, k = rid, 1
            while rid in recordings:
                rid = f"{base}_{k}"
                k += 1
            recordings[rid] = str(p)
        session_id = uuid.uuid4().hex[:12]
        session = Session(session_id, recordings, snippet_ms, embedding)
        session.run_projection(projection, seed)
        with self.lock:
            self.sessions[session_id] = session
        self._append(session_id, {"event": "create", "recordings": recordings,
                                  "snippet_ms": snippet_ms, "embedding": embedding,
                                  "projection": projection, "seed": seed})
        return session

    def get(self, session_id: str) -> Session:
        with self.lock:
            if session_id in self.sessions:
                return self.sessions[session_id]
        session = self.replay(session_id)
        with self.lock:
            self.sessions[session_id] = session
        return session

    def replay(self, session_id: str) -> Session:
        log = self._log_path(session_id)
        if not log.exists():
            raise KeyError(f"unknown session {session_id}")
        events = [json.loads(line) for line in log.read_text().splitlines() if line.strip()]
        if not events or events[0]["event"] != "create":
            raise ValueError(f"corrupt event log for session {session_id}")
        head = events[0]
        session = Session(session_id, head["recordings"], head["snippet_ms"],
                          head.get("embedding", "mfcc"))
        session.run_projection(head.get("projection", "pca"), head.get("seed", 0))
        for ev in events[1:]:
            if ev["event"] == "label":
                session.assign_labels(ev["snippet_ids"], ev["label"])
            elif ev["event"] == "undo":
                session.undo()
            elif ev["event"] == "projection":
                session.run_projection(ev["method"], ev.get("seed", 0))
        return session

    def record_label(self, session: Session, snippet_ids, label: str) -> int:
        n = session.assign_labels(snippet_ids, label)
        self._append(session.id, {"event": "label", "snippet_ids": list(snippet_ids),
                                  "label": label})
        return n

    def record_undo(self, session: Session) -> int:
        n = session.undo()
        self._append(session.id, {"event": "undo"})
        return n

    def record_projection(self, session: Session, method: str, seed: int) -> None:
        session.run_projection(method, seed)
        self._append(session.id, {"event": "projection", "method": method, "seed": seed})
