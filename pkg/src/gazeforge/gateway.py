"""WebSocket gateway: streams frames and state to one viewer, ingests gaze.

Wire protocol (single JSON text frame per message):
  client -> server:  hello {w, h}          once, before anything else
                     gaze {t, x, y, valid} normalized to the canvas
  server -> client:  frame {seq, png_b64}  gapless seq per connection
                     state {mode, destruction_level, t}
                     debug_mask {png_b64}  only when debug is enabled
                     error {detail}

The engine runs on a logical tick task; incoming gaze is quantized to at most
one sample per tick (the freshest wins) with engine-assigned timestamps, which
is also exactly what the session log records.
"""

from __future__ import annotations

import asyncio
import base64
import contextlib
import json
from collections import deque

from fastapi import FastAPI
from fastapi.responses import JSONResponse, PlainTextResponse, Response
from starlette.websockets import WebSocket, WebSocketDisconnect

from .backend import BackendError, InpaintRequest
from .compositor import frame_at
from .config import EngineConfig
from .gaze import StaleSampleError
from .heatmap import heatmap_to_png, mask_to_png
from .imaging import encode_png_rgb
from .runtime import PendingJob, SessionLog, SessionRuntime


class GatewayServer:
    """One engine, one active viewer connection, one logical clock."""

    def __init__(self, config: EngineConfig, backend, record_path: str | None = None):
        self.config = config
        log = SessionLog(record_path) if record_path else None
        self.runtime = SessionRuntime(
            config,
            backend,
            log=log,
            frame_sink=self._queue_crossfade,
            state_sink=self._queue_state,
            mask_sink=self._queue_mask,
        )
        self.runtime.set_submitter(self._submit_threaded)
        self._ingestor = self.runtime.make_ingestor()
        self._client: WebSocket | None = None
        self._outbox: asyncio.Queue | None = None
        self._seq = 0
        self._gaze_latest: dict | None = None
        self._crossfades: deque = deque()  # (plan, next_frame_index)
        self._tick = 0
        self._now = 0
        self._tick_task: asyncio.Task | None = None
        self._stopped = asyncio.Event()

    # -- sinks (called synchronously from engine action execution) -----------

    def _queue_crossfade(self, plan) -> None:
        self._crossfades.append([plan, 1])

    def _queue_state(self, mode: str) -> None:
        self._send_json(
            {
                "type": "state",
                "mode": mode,
                "destruction_level": len(self.runtime.state.history),
                "t": self._now,
            }
        )

    def _queue_mask(self, mask) -> None:
        if self.config.debug:
            png = mask_to_png(mask)
            self._send_json({"type": "debug_mask", "png_b64": base64.b64encode(png).decode("ascii")})

    def _send_json(self, message: dict) -> None:
        if self._outbox is not None:
            self._outbox.put_nowait(json.dumps(message, separators=(",", ":")))

    def _send_frame(self, image) -> None:
        png = encode_png_rgb(image)
        self._send_json(
            {"type": "frame", "seq": self._seq, "png_b64": base64.b64encode(png).decode("ascii")}
        )
        self._seq += 1

    # -- backend jobs off the event loop --------------------------------------

    def _submit_threaded(self, request) -> None:
        job = PendingJob(request=request)
        self.runtime.pending = job

        def work():
            try:
                if isinstance(request, InpaintRequest):
                    job.result = self.runtime.backend.inpaint(request)
                else:
                    job.result = self.runtime.backend.generate(request)
            except BackendError as exc:
                job.error = exc

        asyncio.get_running_loop().run_in_executor(None, work)

    # -- the logical clock -----------------------------------------------------

    async def _tick_loop(self) -> None:
        loop = asyncio.get_running_loop()
        start = loop.time()
        while not self._stopped.is_set():
            target = start + self._tick / self.config.tick_hz
            delay = target - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            self._now = self.config.tick_time_ms(self._tick)
            self._run_tick(self._now)
            self._tick += 1

    def _run_tick(self, now: int) -> None:
        raw = self._gaze_latest
        self._gaze_latest = None
        if raw is not None:
            try:
                sample = self._ingestor.ingest_sample(
                    raw["x"], raw["y"], now, bool(raw["valid"]), 1.0, 1.0
                )
                self.runtime.deliver_gaze([sample], now)
            except (StaleSampleError, KeyError, TypeError):
                pass
        if self.runtime.job_ready():
            self.runtime.deliver_job_result(now)
        self.runtime.deliver_tick(now)
        self._pump_frames()

    def _pump_frames(self) -> None:
        if self._outbox is None:
            self._crossfades.clear()
            return
        if not self._crossfades:
            return
        entry = self._crossfades[0]
        plan, i = entry
        self._send_frame(frame_at(plan, i))
        if i >= plan.n_frames:
            self._crossfades.popleft()
        else:
            entry[1] = i + 1

    # -- connection handling ----------------------------------------------------

    async def handle_session(self, ws: WebSocket) -> None:
        await ws.accept()
        if self._client is not None:
            await ws.send_text(json.dumps({"type": "error", "detail": "busy"}, separators=(",", ":")))
            await ws.close()
            return
        self._client = ws
        self._outbox = asyncio.Queue()
        self._seq = 0
        writer = asyncio.create_task(self._writer(ws))
        try:
            hello = json.loads(await ws.receive_text())
            if not isinstance(hello, dict) or hello.get("type") != "hello":
                self._send_json({"type": "error", "detail": "expected hello"})
                return
            self._queue_state(self.runtime.state.mode)
            self._send_frame(self.runtime.state.current_image)
            while True:
                message = json.loads(await ws.receive_text())
                if not isinstance(message, dict):
                    raise ValueError("message must be an object")
                if message.get("type") == "gaze":
                    self._gaze_latest = message
                # unknown message types are tolerated for forward compatibility
        except WebSocketDisconnect:
            pass
        except (json.JSONDecodeError, ValueError, KeyError):
            with contextlib.suppress(Exception):
                await ws.send_text(
                    json.dumps({"type": "error", "detail": "protocol violation"}, separators=(",", ":"))
                )
        finally:
            writer.cancel()
            self._client = None
            self._outbox = None
            self._gaze_latest = None
            with contextlib.suppress(Exception):
                await ws.close()

    async def _writer(self, ws: WebSocket) -> None:
        outbox = self._outbox
        while True:
            text = await outbox.get()
            await ws.send_text(text)

    # -- lifecycle ---------------------------------------------------------------

    async def start(self) -> None:
        self._stopped.clear()
        self._tick_task = asyncio.create_task(self._tick_loop())

    async def stop(self) -> None:
        self._stopped.set()
        if self._tick_task is not None:
            self._tick_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await self._tick_task
        self.runtime.close()  # flush the session log


def build_app(
    config: EngineConfig, backend=None, record_path: str | None = None
) -> FastAPI:
    server = GatewayServer(config, backend if backend is not None else MockBackend(), record_path)

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        await server.start()
        try:
            yield
        finally:
            await server.stop()

    app = FastAPI(lifespan=lifespan)
    app.state.gateway = server

    @app.get("/health")
    def health():
        return PlainTextResponse("ok")

    @app.get("/config")
    def get_config():
        return JSONResponse(config.to_json(redact_seed=not config.debug))

    @app.get("/debug/heatmap")
    def debug_heatmap():
        if not config.debug:
            return PlainTextResponse("debug disabled", status_code=404)
        return Response(heatmap_to_png(server.runtime.state.heatmap), media_type="image/png")

    @app.websocket("/session")
    async def session(ws: WebSocket):
        await server.handle_session(ws)

    return app


def serve(config: EngineConfig, backend=None, record_path: str | None = None) -> None:
    """Run the gateway until a shutdown signal; flushes the session log on exit."""
    import uvicorn

    host, _, port = config.listen.partition(":")
    app = build_app(config, backend, record_path)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8765), log_level="warning")
