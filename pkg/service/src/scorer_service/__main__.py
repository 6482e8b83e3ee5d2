import argparse
import os


def main():
    ap = argparse.ArgumentParser(prog="scorer-service")
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=8000)
    ap.add_argument("--max-batch", type=int)
    args = ap.parse_args()
    if args.max_batch:
        os.environ["SCORER_SERVICE_MAX_BATCH"] = str(args.max_batch)

    import uvicorn

    from .app import app_from_env

    uvicorn.run(app_from_env(), host=args.host, port=args.port, log_level="warning")


if __name__ == "__main__":
    main()
