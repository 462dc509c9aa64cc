"""Topic grammar and subscription matching.

Topics are absolute slash paths: "/sensors/ahrs". Segments are nonempty
and may not contain slashes or whitespace. A subscription pattern is
either an exact topic or a topic whose final segment is "*", which matches
one or more remaining segments: "/a/*" covers "/a/b" and "/a/b/c" but not
"/a" itself. The wildcard is only valid in that trailing position.
"""

from __future__ import annotations


def valid_topic(topic: str) -> bool:
    if not topic.startswith("/") or len(topic) < 2:
        return False
    segments = topic[1:].split("/")
    return all(
        seg and "*" not in seg and not any(c.isspace() for c in seg)
        for seg in segments
    )


def valid_pattern(pattern: str) -> bool:
    if valid_topic(pattern):
        return True
    if not pattern.endswith("/*"):
        return pattern == "/*"
    head = pattern[:-2]
    return head == "" or valid_topic(head)


def topic_matches(pattern: str, topic: str) -> bool:
    """True when the pattern covers the topic; see the module docstring."""
    if pattern.endswith("/*"):
        prefix = pattern[:-1]  # keep the slash
        return topic.startswith(prefix) and len(topic) > len(prefix)
    return pattern == topic
