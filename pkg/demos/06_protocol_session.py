"""Drive an environment over the jcnsra/1 wire protocol.

A server thread owns the snapshot; the client speaks line-delimited JSON over
TCP.  External learners (any language) integrate exactly this way; the same
transcript replayed against a fresh server is byte-identical.

Run:  python demos/06_protocol_session.py
"""

import json

from pcnsim import (EnvConfig, ProtocolServer, SampleConfig, episode_script,
                    run_script, synthetic_snapshot)
from pcnsim.protocol import encode_message
from pcnsim.routing import FlowConfig

snapshot = synthetic_snapshot(2000, seed=1)
config = EnvConfig(sample=SampleConfig(target_size=30, seed=0),
                   flow=FlowConfig(count_per_amount=60), episode_length=3)

server = ProtocolServer(("127.0.0.1", 0), snapshot, config)
server.serve_in_thread()
print(f"server listening on 127.0.0.1:{server.port}")

script = [encode_message({"type": "hello"}).strip()]
script += episode_script(seed=5, actions=[(3, 2), (11, 8), (3, 5)])
script.append(encode_message({"type": "close"}).strip())

print("\nrequest/response exchange:")
transcript = run_script("127.0.0.1", server.port, script)
for req, raw in zip(script, transcript.splitlines()):
    resp = json.loads(raw)
    if resp["type"] == "state":
        body = (f"state: reward={resp['reward']} done={resp['done']} "
                f"info={resp['info']} obs[{len(resp['observation'])} numbers]")
    else:
        body = json.dumps(resp)
    print(f"  -> {req}")
    print(f"  <- {body}")

replay = run_script("127.0.0.1", server.port, script)
print(f"\nreplay byte-identical: {replay == transcript}")
server.shutdown()
server.server_close()
