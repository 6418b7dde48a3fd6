import sys

from dotenv import load_dotenv, find_dotenv

from src.cli import run

load_dotenv(find_dotenv())

if __name__ == "__main__":
    sys.exit(run())
