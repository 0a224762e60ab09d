"""Fetch UD English-EWT into the dagparser data directory.

    python scripts/download_ud.py [--tag r2.2] [--dest DIR]

Files land in DEST/UD_English-EWT/ (DEST defaults to $DAGPARSER_DATA or
~/.dagparser), which is where the optional large-scale acceptance test
looks for them.
"""
import argparse
import os
import sys
import urllib.request

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))
from dagparser.fixtures import default_data_dir  # noqa: E402

BASE = "https://raw.githubusercontent.com/UniversalDependencies/UD_English-EWT/{tag}/en_ewt-ud-{split}.conllu"


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--tag", default="master", help="git tag or branch of the treebank repository")
    ap.add_argument("--dest", default=default_data_dir())
    args = ap.parse_args()
    out_dir = os.path.join(args.dest, "UD_English-EWT")
    os.makedirs(out_dir, exist_ok=True)
    for split in ("train", "dev", "test"):
        url = BASE.format(tag=args.tag, split=split)
        target = os.path.join(out_dir, f"en_ewt-ud-{split}.conllu")
        print(f"{url} -> {target}")
        urllib.request.urlretrieve(url, target)


if __name__ == "__main__":
    main()
