import sys

from burstsched.cli import main

sys.exit(main())
