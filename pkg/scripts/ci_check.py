#!/usr/bin/env python3
import os
import subprocess
import sys


def run_command(command, description):
    print(f"🚀 Running {description}...")
    try:
        subprocess.check_call(command, shell=True)
        print(f"✅ {description} passed!")
        return True
    except subprocess.CalledProcessError:
        print(f"❌ {description} failed!")
        return False


def main():
    print("🩺 dicova-bench CI pipeline")
    print("==========================")

    os.environ["PYTHONPATH"] = os.getcwd()

    groups = [
        ("tests/test_corpus.py tests/test_audio.py tests/test_features.py", "Corpus, audio & feature tests"),
        ("tests/test_models.py", "Classifier tests"),
        ("tests/test_eval.py tests/test_fusion.py", "Evaluation & fusion tests"),
        ("tests/test_leaderboard.py tests/test_config.py", "Leaderboard & config tests"),
        ("tests/test_pipeline.py tests/test_cli.py", "Pipeline & CLI tests"),
    ]
    for paths, description in groups:
        if not run_command(f"python3 -m pytest -q -m 'not slow' {paths}", description):
            sys.exit(1)

    if "--fast" not in sys.argv:
        if not run_command("python3 -m pytest -q -m slow tests/", "End-to-end pipeline tests"):
            sys.exit(1)

    print("\n🎉 All CI checks passed!")


if __name__ == "__main__":
    main()
