"""Entry point: python run.py {simulate,compare,verify} ..."""

from app.main import main

if __name__ == "__main__":
    raise SystemExit(main())
