import sys

from script_runner.worker import main

sys.exit(main())
