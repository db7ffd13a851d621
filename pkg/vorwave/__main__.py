#!/usr/bin/env python3
from vorwave.cli import main

if __name__ == "__main__":
    main()
