import sys

from polyeo.cli import main

sys.exit(main())
