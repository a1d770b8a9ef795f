"""Command-line front end: a thin client of the experiment service.

By default the CLI talks to an in-process instance of the FastAPI app (no
server needed); ``--server URL`` points it at a remote instance instead. The
client sends the config document, receives complete artifact files back,
writes them under the output directory, and records a manifest with content
hashes. Nothing is written unless the job succeeded.

Exit codes: 0 success, 1 config error, 2 runtime error.

The output directory defaults to ``./out``; the ``HWFEDSIM_OUT`` environment
variable overrides the default and ``--out`` overrides both.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import httpx

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

OUT_ENV_VAR = "HWFEDSIM_OUT"

_ENDPOINTS = {
    "run": "/run",
    "compare": "/compare",
    "sweep-k": "/sweep/k",
    "sweep-weights": "/sweep/weights",
}


class ConfigError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hwfedsim",
        description="Hardware-aware federated learning scheduling simulator",
    )
    parser.add_argument(
        "--print-defaults",
        action="store_true",
        help="print the full default config as JSON and exit",
    )
    sub = parser.add_subparsers(dest="command")
    for name, help_text in [
        ("run", "run every configured method and write round/summary CSVs"),
        ("compare", "run >= 2 methods and write the comparison table"),
        ("sweep-k", "rerun the first method across participant counts"),
        ("sweep-weights", "rerun the first method across CPU-weight values"),
    ]:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="path to the JSON config file")
        cmd.add_argument("--out", default=None, help="output directory")
        cmd.add_argument(
            "--seeds", default=None, help="comma-separated override of trial seeds"
        )
        cmd.add_argument(
            "--server",
            default=None,
            help="base URL of a running service (default: in-process)",
        )
    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _load_config_document(path: str) -> dict:
    config_path = Path(path)
    try:
        text = config_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    # File references inside the config are client-side paths; resolve them
    # against the config file's directory before shipping the document.
    base = config_path.resolve().parent
    if isinstance(document.get("fleet_csv"), str):
        document["fleet_csv"] = str((base / document["fleet_csv"]).resolve())
    data = document.get("data")
    if isinstance(data, dict) and isinstance(data.get("csv_path"), str):
        data["csv_path"] = str((base / data["csv_path"]).resolve())
    return document


def _parse_seeds(raw: str) -> list[int]:
    try:
        return [int(part) for part in raw.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"--seeds must be comma-separated integers: {raw!r}") from exc


def _client(server: str | None) -> httpx.Client:
    if server is not None:
        return httpx.Client(base_url=server.rstrip("/"), timeout=600.0)
    from .service.app import app

    return httpx.Client(
        transport=httpx.ASGITransport(app=app),
        base_url="http://hwfedsim.local",
        timeout=600.0,
    )


def _resolve_out_dir(flag_value: str | None) -> Path:
    if flag_value is not None:
        return Path(flag_value)
    return Path(os.environ.get(OUT_ENV_VAR, "out"))


def _write_outputs(response: dict, out_dir: Path, config_path: str, command: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_files = []
    for item in response["files"]:
        content = item["content"].encode("utf-8")
        digest = hashlib.sha256(content).hexdigest()
        if digest != item["sha256"]:
            raise RuntimeError(f"artifact {item['name']} failed its hash check")
        (out_dir / item["name"]).write_bytes(content)
        manifest_files.append({"name": item["name"], "sha256": digest})
        print(f"wrote {out_dir / item['name']}")
    manifest = {
        "command": command,
        "config_path": config_path,
        "out_dir": str(out_dir),
        "resolved": response["resolved"],
        "files": manifest_files,
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {manifest_path}")


def _run_job(args: argparse.Namespace) -> int:
    document = _load_config_document(args.config)
    payload: dict = {"config": document}
    if args.seeds is not None:
        payload["seeds"] = _parse_seeds(args.seeds)
    out_dir = _resolve_out_dir(args.out)

    with _client(args.server) as client:
        response = client.post(_ENDPOINTS[args.command], json=payload)
    if response.status_code in (400, 422):
        detail = response.json().get("detail", response.text)
        print(f"config error: {json.dumps(detail) if not isinstance(detail, str) else detail}",
              file=sys.stderr)
        return EXIT_CONFIG
    if response.status_code != 200:
        print(f"service error (HTTP {response.status_code}): {response.text}", file=sys.stderr)
        return EXIT_RUNTIME

    body = response.json()
    if body.get("table"):
        print(body["table"], end="")
    _write_outputs(body, out_dir, args.config, args.command)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.print_defaults:
        from .config import defaults_json

        print(defaults_json())
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG
    if args.command == "serve":
        import uvicorn

        from .service.app import app

        uvicorn.run(app, host=args.host, port=args.port)
        return EXIT_OK

    try:
        return _run_job(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except httpx.HTTPError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - the CLI boundary maps to exit codes
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
