import sys

from rabi.main import cli_main

sys.exit(cli_main())
