"""
Machine graph export

Writes each machine's edge set as GraphML for documentation rendering.
"""

from pathlib import Path
from typing import List, Union

import networkx as nx

from .agv import AGV_MACHINE
from .uav import UAV_MACHINE

MACHINES = (UAV_MACHINE, AGV_MACHINE)


def export_machines(out_dir: Union[str, Path]) -> List[Path]:
    """
    Write ``uav_fsm.graphml`` and ``agv_fsm.graphml``

    Args:
        out_dir: Target directory, created if missing

    Returns:
        Paths of the written files
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for machine in MACHINES:
        path = out / f"{machine.name}_fsm.graphml"
        nx.write_graphml(machine.to_graph(), path)
        written.append(path)
    return written
